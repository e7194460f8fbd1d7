"""
Reading and writing realization, tuple and report files.

The format follows the extension: .msgpack / .mp files are msgpack, anything
else is JSON. JSON reports use sorted keys and a fixed indent so identical
runs produce byte-identical files.
"""
import json
import logging
import os

import msgpack
import numpy as np

from ncrat.errors import NcratError
from ncrat.ncalg import MatrixTuple
from ncrat.realization import DescriptorRealization

logger = logging.getLogger(__name__)

MSGPACK_EXTENSIONS = (".msgpack", ".mp")


class UnreadableFile(NcratError):
    """Missing or undecodable input file (exit code 1)."""


def _is_msgpack(path):
    return os.path.splitext(path)[1].lower() in MSGPACK_EXTENSIONS


def to_plain(value):
    """Converts numpy scalars/arrays and objects with to_dict() into JSON-ready values."""
    if hasattr(value, "to_dict"):
        return to_plain(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def dumps(data):
    return json.dumps(to_plain(data), sort_keys=True, indent=2) + "\n"


def write_document(path, data):
    """
    Writes data to path, creating parent directories.

    Args:
        path: output file; extension selects msgpack or JSON
        data: dict (or object with to_dict)
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if _is_msgpack(path):
        payload = msgpack.packb(to_plain(data))
    else:
        payload = dumps(data).encode("utf-8")
    with open(path, "wb") as f:
        f.write(payload)
        f.flush()
        os.fsync(f.fileno())
    logger.debug("wrote %s", path)


def read_document(path):
    """
    Raises:
        UnreadableFile: the file is missing or does not decode
    """
    try:
        if _is_msgpack(path):
            with open(path, "rb") as f:
                return msgpack.unpackb(f.read())
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (OSError, ValueError, msgpack.ExtraData, msgpack.FormatError, msgpack.StackError) as e:
        raise UnreadableFile(f"cannot read {path}: {e}") from e


def load_realization(path):
    data = read_document(path)
    try:
        return DescriptorRealization.from_dict(data)
    except (KeyError, TypeError) as e:
        raise UnreadableFile(f"{path} is not a realization: missing or malformed {e}") from e


def save_realization(path, R):
    write_document(path, R.to_dict())


def load_tuple(path):
    data = read_document(path)
    try:
        return MatrixTuple.from_dict(data)
    except (KeyError, TypeError) as e:
        raise UnreadableFile(f"{path} is not a matrix tuple: missing or malformed {e}") from e


def save_tuple(path, X):
    write_document(path, X.to_dict())
