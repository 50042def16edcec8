from . import kernels
from .layers import BiLstm, CrfLayer, EmbeddingTable, Linear
from .model import CrfTagger, EncodedSentence, PdClassifier
from .train import TrainHistory, TrainSchedule, train

__all__ = [
    "kernels",
    "BiLstm",
    "CrfLayer",
    "EmbeddingTable",
    "Linear",
    "CrfTagger",
    "EncodedSentence",
    "PdClassifier",
    "TrainHistory",
    "TrainSchedule",
    "train",
]
