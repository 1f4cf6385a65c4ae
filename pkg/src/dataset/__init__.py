from src.dataset.records import Dataset, FeatureRecord, SPLIT_TEST, SPLIT_TRAIN
from src.dataset.synthetic import SynthConfig, generate
from src.dataset.splits import split_by_state
from src.dataset.feature_io import read_features, write_features, manifest_path_for
