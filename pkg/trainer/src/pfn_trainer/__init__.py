"""GRU-based trainer for in-context causal effect prediction.

Consumes corpora produced by the `ctpr` generator (JSONL export by default,
native binary reader included) and emits `index,mean,std` predictions files
that the generator's `evaluate --method predictions-file` scores.
"""

from pfn_trainer.config import TrainerConfig
from pfn_trainer.corpus import load_corpus
from pfn_trainer.model import CausalQueryNet
from pfn_trainer.predict import predict, shuffle_predict
from pfn_trainer.train import train

__version__ = "0.1.0"
