"""Time-to-event estimation for event-linked microtext streams."""

from .corpus import Event, LabeledTweet, Tweet, label_and_window, load_events, load_tweets
from .estimator import Estimate, Source, estimate_stream
from .evaluate import EvalReport, loeo, transfer_eval
from .features import FeatureKey, FeatureKind, Fn, TrainedModel, train_model
from .rules import RuleSet, load_rules
from .texpr import CompiledPatternSet, Lexicon, expand, extract, load_grammar

__version__ = "0.1.0"

__all__ = [
    "CompiledPatternSet",
    "Estimate",
    "EvalReport",
    "Event",
    "FeatureKey",
    "FeatureKind",
    "Fn",
    "LabeledTweet",
    "Lexicon",
    "RuleSet",
    "Source",
    "TrainedModel",
    "Tweet",
    "__version__",
    "estimate_stream",
    "expand",
    "extract",
    "label_and_window",
    "load_events",
    "load_grammar",
    "load_rules",
    "load_tweets",
    "loeo",
    "train_model",
    "transfer_eval",
]
