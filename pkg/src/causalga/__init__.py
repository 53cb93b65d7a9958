"""Score-governed causal structure search with non-decisional suggestion oracles."""
