"""Python face of the native actor runtime: atoms, copy-on-write messages,
messaging interfaces and the benchmark drivers."""

from ._cafx import (
    Message,
    MessagingInterface,
    RuntimeFailure,
    atom_decode,
    atom_encode,
    copy_stats,
    default_factor_target,
    deserialize,
    factorize,
    is_subset,
    is_valid_atom_text,
    mandelbrot_cell,
    mandelbrot_row,
    run_creation,
    run_mailbox,
    run_mandelbrot,
    run_mixed,
)

__all__ = [
    "Message",
    "MessagingInterface",
    "RuntimeFailure",
    "atom_decode",
    "atom_encode",
    "copy_stats",
    "default_factor_target",
    "deserialize",
    "factorize",
    "is_subset",
    "is_valid_atom_text",
    "mandelbrot_cell",
    "mandelbrot_row",
    "run_creation",
    "run_mailbox",
    "run_mandelbrot",
    "run_mixed",
]
