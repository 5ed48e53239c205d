"""Feed-forward price-class models for football players."""
from .dataio import (Dataset, NormalizationSpec, PlayerRecord, PlayerTable, PriceLadder,
                     build_price_ladder, generate_synthetic, make_dataset,
                     normalize_features, parse_player_csv, split_dataset)
from .netcore import Network, NetworkConfig, backward, forward, init_network, loss_total
from .optim import Hyperparams, OptimizerState, anneal_rate, nesterov_step
from .persist import ModelBundle, load_model, predict_price, save_model
from .trainer import MetricsBundle, TrainingReport, evaluate, fit, sweep

__version__ = "0.1.0"
