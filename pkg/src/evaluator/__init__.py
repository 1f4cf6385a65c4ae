from src.evaluator.gallery import Gallery, build_gallery
from src.evaluator.tasks import (TASK_NAMES, RetrievalScore, TaskReport, average_precision, classify, classify_many,
                                 retrieval_map, run_eight_tasks, run_tasks_from_galleries)
from src.evaluator.export import export_embeddings, read_embeddings
