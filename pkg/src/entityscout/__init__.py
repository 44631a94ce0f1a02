"""entityscout: build ad-hoc entity taggers interactively by treating
every corpus token as a retrievable document of tagger features."""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    Document,
    JudgmentSet,
    Sentence,
    Token,
    Tokenizer,
    normalize_surface,
    read_conll,
    read_judgments,
    read_plaintext,
    write_conll,
)
from .errors import (
    ConfigError,
    EmptyCorpusError,
    EntityScoutError,
    ModelFormatError,
    ParseError,
    SessionComplete,
    SessionError,
    SingleClassError,
    TrainingError,
)
from .evaluation import (
    LearningCurve,
    RankedToken,
    TimingReport,
    TimingRow,
    curve_aggregate,
    micro_macro_f1,
    time_queries,
    token_f1,
    unique_ap,
)
from .features import (
    ClusterMap,
    FeatureConfig,
    extract,
    feature_family,
    load_clusters,
    word_shape,
)
from .index import FeatureIndex, ScoredToken, TokenOccurrence, build_index, open_index
from .model import (
    LabeledToken,
    QueryModel,
    TrainConfig,
    feature_importance,
    load_model,
    prune,
    save_model,
    train,
    uncertainty,
)
from .session import STRATEGIES, Session, SimulatedUser, run_simulation
