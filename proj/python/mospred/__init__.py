"""MOS prediction over frozen frame-level features."""

import json
import pathlib

from . import _core
from ._core import (
    ArgumentError,
    CcaModel,
    FormatError,
    IoError,
    LookupError,
    Model,
    MospredError,
    NumericError,
    ShapeError,
    TrainingError,
    UndefinedCorrelation,
    cca_fit,
    evaluate,
    fractional_ranks,
    lcc,
    mse,
    read_features,
    segment_frames,
    srcc,
    utterance_embed,
    write_features,
)

__all__ = [
    "ArgumentError", "CcaModel", "FormatError", "IoError", "LookupError", "Model", "MospredError", "NumericError",
    "ShapeError", "TrainingError", "UndefinedCorrelation", "cca_fit", "evaluate", "fractional_ranks", "lcc", "mse",
    "read_features", "segment_frames", "srcc", "utterance_embed", "write_features", "run", "train", "schema_dir",
]

_ERRORS = {
    "ArgumentError": ArgumentError,
    "ShapeError": ShapeError,
    "LookupError": LookupError,
    "NumericError": NumericError,
    "UndefinedCorrelation": UndefinedCorrelation,
    "TrainingError": TrainingError,
    "IoError": IoError,
    "FormatError": FormatError,
}


def schema_dir():
    """Directory holding the JSON Schemas of every CLI output."""
    # Installed next to the extension module, which an editable install keeps apart from this file.
    return pathlib.Path(_core.__file__).with_name("schemas")


def _flags(options):
    args = []
    for key, value in options.items():
        flag = "--" + key.replace("_", "-")
        if value is True:
            args.append(flag)
        elif value is not False and value is not None:
            args += [flag, str(value)]
    return args


def run(*args, **options):
    """Runs a `mospred` subcommand in-process.

    Keyword options become flags (`hidden_dim=8` -> `--hidden-dim 8`, `True` -> bare flag).
    Returns parsed JSON when stdout is JSON, otherwise the raw text. Failures raise the
    matching MospredError subclass.
    """
    code, out, err = _core.run_cli([str(a) for a in args] + _flags(options))
    if code != 0:
        try:
            report = json.loads(err.strip().splitlines()[-1])
            kind, message = report["error"], report["message"]
        except (ValueError, KeyError, IndexError):
            raise MospredError(err.strip())
        raise _ERRORS.get(kind, MospredError)(f"{kind}: {message}")
    try:
        return json.loads(out)
    except ValueError:
        return out


def train(manifest, valid_manifest, out, **options):
    """Trains a model; returns the run summary. See `mospred train --help` for options."""
    return run("train", manifest=manifest, valid_manifest=valid_manifest, out=out, **options)
