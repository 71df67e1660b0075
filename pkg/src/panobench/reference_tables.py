"""Published benchmark rows used as golden values.

Spatial-consistency rows: six per-class IoUs (Wall, Door, Window, Cabinet,
Sofa, Bed) and the printed average. Expert rows: (spatial consistency,
aesthetic, plausibility) and the printed total.
"""

MACHINE_METRICS = {
    "Seedream 4.5": ((0.8028, 0.2769, 0.2000, 0.2510, 0.3336, 0.5155), 0.3966),
    "Gemini 3 Pro Image": ((0.8916, 0.4379, 0.3453, 0.5361, 0.3500, 0.6099), 0.5285),
    "Ours (FLUX.2)": ((0.9693, 0.6578, 0.4770, 0.6816, 0.6956, 0.7423), 0.7039),
    "Ours (Qwen-Image-Edit)": ((0.9650, 0.6770, 0.5416, 0.5594, 0.7296, 0.7489), 0.7036),
}

SFT_ABLATION = {
    "Base + Stage 2": ((0.9636, 0.6071, 0.6067, 0.5398, 0.6623, 0.7388), 0.6760),
    "Stage 1 + Stage 2": ((0.9648, 0.6174, 0.5392, 0.5009, 0.7153, 0.7596), 0.6829),
    "Stage 1 + Stage 2 + Stage 3": ((0.9629, 0.6699, 0.5275, 0.5417, 0.7295, 0.7486), 0.6967),
}

RL_ABLATION = {
    "Base": ((0.9629, 0.6699, 0.5275, 0.5417, 0.7295, 0.7486), 0.6967),
    "Base + NFT": ((0.9635, 0.6628, 0.5292, 0.5575, 0.7382, 0.7481), 0.6999),
    "Base + DPO": ((0.9640, 0.6872, 0.5449, 0.5564, 0.7264, 0.7420), 0.7035),
    "Base + DPO + NFT": ((0.9650, 0.6770, 0.5416, 0.5594, 0.7296, 0.7489), 0.7036),
}

PROMPT_ABLATION = {
    "Ours (w/o Prompt-LLM)": ((0.9649, 0.6757, 0.6669, 0.5230, 0.7609, 0.7473), 0.7231),
    "Ours (w/ Prompt-LLM)": ((0.9629, 0.6699, 0.5275, 0.5417, 0.7295, 0.7486), 0.6967),
}

SPATIAL_TABLES = {
    "machine_metrics": MACHINE_METRICS,
    "sft_ablation": SFT_ABLATION,
    "rl_ablation": RL_ABLATION,
    "prompt_ablation": PROMPT_ABLATION,
}

# (spatial consistency, aesthetic, plausibility), printed total, expected tier
EXPERT_EVAL = {
    "Seedream 4.5": ((1.66, 1.26, 1.80), 1.54, "C"),
    "Gemini 3 Pro Image": ((3.33, 2.66, 3.79), 3.20, "B"),
    "Ours (FLUX.2)": ((4.12, 3.21, 3.85), 3.68, "A"),
    "Ours (Qwen-Image-Edit)": ((4.28, 3.20, 3.91), 3.74, "A"),
}
