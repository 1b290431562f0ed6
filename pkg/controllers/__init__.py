from .experiment_runner import ExperimentRunner, threads_from_env

__all__ = ["ExperimentRunner", "threads_from_env"]
