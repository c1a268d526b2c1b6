"""Day-ahead building load forecasting with SVR trained on DTW-selected relevant days."""

from .dataset import Dataset, DayRecord, DayType, fit_scaler, ingest_csv
from .dtw import dtw_distance, lb_keogh
from .features import ProfileConfig, assemble_training_matrix, load_profiles
from .pipeline import PredictionReport, RunConfig, run, run_relevant, run_whole, sweep_k
from .selector import select_for_date
from .svr import SvrModel, SvrParams, predict, solve_dual, train_svr
from .synthetic import generate_synthetic, write_corpus
from .tuning import GridSpec, grid_search, r2, rmse

__version__ = "0.1.0"

__all__ = [
    "Dataset", "DayRecord", "DayType", "fit_scaler", "ingest_csv", "dtw_distance", "lb_keogh",
    "ProfileConfig", "assemble_training_matrix", "load_profiles", "PredictionReport", "RunConfig",
    "run", "run_relevant", "run_whole", "sweep_k", "select_for_date", "SvrModel", "SvrParams",
    "predict", "solve_dual", "train_svr", "generate_synthetic", "write_corpus", "GridSpec",
    "grid_search", "r2", "rmse",
]
