from data.datasets import Dataset, Scaler, gen_sine, load_csv, sine_curve, split, standardize

__all__ = ["Dataset", "Scaler", "gen_sine", "load_csv", "sine_curve", "split", "standardize"]
