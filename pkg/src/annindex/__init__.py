from src.annindex.distance import squared_distances
from src.annindex.kmeans import KMeansResult, kmeans_fit
from src.annindex.ivf import NO_NEIGHBOR, PartitionIndex, build_ivf, sample_within_cell
from src.annindex.neighbors import all_nn_within_category, knn_exact
