import time
import logging
import functools
import traceback
import uuid
from contextlib import contextmanager
from contextvars import ContextVar

from back_end.utils.config import RUNTIME

# Logger spécifique pour le monitoring
logger = logging.getLogger("monitoring")

# Variable de contexte pour suivre une exécution (commande CLI, épisode...)
run_id_var = ContextVar("run_id", default=None)


def setup_logging(log_file=None, level=None):
    """Configure le logging (fichier + console) une seule fois par processus."""
    log_file = log_file or RUNTIME["log_file"]
    level = level or RUNTIME["log_level"]
    handlers = [logging.StreamHandler()]
    if log_file:
        handlers.insert(0, logging.FileHandler(log_file, mode="a", encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
    )
    logger.info(f"Logging initialisé (niveau={level}, fichier={log_file})")


def start_run():
    """Attribue un identifiant à l'exécution courante et le retourne."""
    run_id = str(uuid.uuid4())[:8]
    run_id_var.set(run_id)
    return run_id


class PerformanceMonitor:
    """Utilitaire pour suivre les performances des fonctions et méthodes"""

    _metrics = {}

    @classmethod
    def time_function(cls, func):
        """Décorateur pour mesurer le temps d'exécution d'une fonction"""
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            function_name = f"{func.__module__}.{func.__name__}"
            start_time = time.perf_counter()
            run_id = run_id_var.get()
            try:
                result = func(*args, **kwargs)
                execution_time = time.perf_counter() - start_time
                cls.record(function_name, execution_time)
                logger.debug(f"[{run_id}] FIN {function_name}: durée={execution_time:.4f}s")
                return result
            except Exception as e:
                execution_time = time.perf_counter() - start_time
                logger.error(f"[{run_id}] ERREUR {function_name}: durée={execution_time:.4f}s - {str(e)}")
                logger.debug(f"[{run_id}] TRACE: {traceback.format_exc()}")
                raise

        return wrapper

    @classmethod
    @contextmanager
    def timer(cls, name):
        """
        Mesure un bloc de code.

        Yields:
            Dict dont la clé "ms" est remplie à la sortie du bloc
        """
        elapsed = {"ms": 0.0}
        start_time = time.perf_counter()
        try:
            yield elapsed
        finally:
            execution_time = time.perf_counter() - start_time
            elapsed["ms"] = execution_time * 1000.0
            cls.record(name, execution_time)

    @classmethod
    def record(cls, name, execution_time):
        """Enregistrer une mesure"""
        if name not in cls._metrics:
            cls._metrics[name] = {
                "count": 0,
                "total_time": 0,
                "min_time": float("inf"),
                "max_time": 0
            }

        cls._metrics[name]["count"] += 1
        cls._metrics[name]["total_time"] += execution_time
        cls._metrics[name]["min_time"] = min(cls._metrics[name]["min_time"], execution_time)
        cls._metrics[name]["max_time"] = max(cls._metrics[name]["max_time"], execution_time)

    @classmethod
    def get_metrics(cls):
        """Récupérer les métriques collectées"""
        result = {}
        for name, metrics in cls._metrics.items():
            result[name] = {
                "count": metrics["count"],
                "avg_time": metrics["total_time"] / metrics["count"] if metrics["count"] > 0 else 0,
                "min_time": metrics["min_time"] if metrics["min_time"] != float("inf") else 0,
                "max_time": metrics["max_time"]
            }
        return result

    @classmethod
    def reset_metrics(cls):
        """Réinitialiser les métriques"""
        cls._metrics = {}
