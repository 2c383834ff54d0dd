"""Small float64 neural-network core with hand-written backpropagation."""
from .gradcheck import check_network, numeric_gradient, relative_error, tensor_relative_error
from .layers import (BiLSTM, Dense, Dropout, LSTM, LstmCellParams, bilstm_forward,
                     dense_forward, dropout_apply, lstm_forward, lstm_step, sigmoid)
from .loss import one_hot, softmax, softmax_xent
from .network import LayerSpec, NetSpec, Network, blstm_spec, dnn_spec
from .optim import AdamState, adam_step
from .training import (EarlyStopping, EpochRecord, TrainConfig, TrainingError, train,
                       validation_split)

__all__ = [
    "AdamState", "BiLSTM", "Dense", "Dropout", "EarlyStopping", "EpochRecord", "LSTM",
    "LayerSpec", "LstmCellParams", "NetSpec", "Network", "TrainConfig", "TrainingError",
    "adam_step", "bilstm_forward", "blstm_spec", "check_network", "dense_forward",
    "dnn_spec", "dropout_apply", "lstm_forward", "lstm_step", "numeric_gradient", "one_hot",
    "relative_error", "sigmoid", "softmax", "softmax_xent", "tensor_relative_error", "train",
    "validation_split",
]
