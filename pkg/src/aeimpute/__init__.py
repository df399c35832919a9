"""Missing-data imputation with stacked (denoising) autoencoders and search-based fillers."""

__version__ = "0.1.0"
