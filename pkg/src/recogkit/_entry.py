"""Console entry point.

Applies the RECOGKIT_THREADS cap to the BLAS thread environment before
numpy is imported, then dispatches to the click CLI.
"""

import os

THREAD_ENV = "RECOGKIT_THREADS"
_BLAS_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def main():
    threads = os.environ.get(THREAD_ENV)
    if threads:
        for var in _BLAS_VARS:
            os.environ.setdefault(var, threads)
    from .cli import cli

    return cli()
