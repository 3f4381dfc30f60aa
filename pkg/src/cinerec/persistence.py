"""Binary model artifact.

Layout::

    b"CINEREC1"                       8 bytes
    header length                     uint64 little-endian
    header                            UTF-8 JSON
    payload                           float64 little-endian:
                                      mu, b_u, b_i, P (row-major), Q (row-major)
    footer                            uint64 little-endian byte count of
                                      everything before the footer
"""

from __future__ import annotations

import json
import os
import struct
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .collaborative import MatrixFactorization
from .content import FeatureVocabulary
from .errors import BadMagic, ChecksumMismatch, TruncatedPayload, UnsupportedVersion

MAGIC = b"CINEREC1"
FORMAT_VERSION = 1
_U64 = struct.Struct("<Q")
_F8 = np.dtype("<f8")


def _created_at() -> int:
    # reproducible builds pin the timestamp
    env = os.environ.get("SOURCE_DATE_EPOCH")
    return int(env) if env else int(time.time())


def dumps_model(model: MatrixFactorization, vocab: Optional[FeatureVocabulary] = None,
                extra: Optional[dict] = None) -> bytes:
    n_users, n_items = len(model.user_ids_), len(model.item_ids_)
    f = model.user_factors_.shape[1]
    header = {
        "format_version": FORMAT_VERSION,
        "counts": {"n_users": n_users, "n_items": n_items, "n_factors": f},
        "hyperparameters": model.get_params(),
        "scale": list(model.scale_),
        "user_ids": list(model.user_ids_),
        "item_ids": list(model.item_ids_),
        "item_popularity": model.item_popularity_.tolist(),
        "training_rmse": list(model.training_rmse_),
        "created_at": _created_at(),
        "vocabulary": vocab.to_dict() if vocab is not None else None,
        "extra": extra or {},
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = np.concatenate([
        np.array([model.global_mean_]),
        model.user_bias_,
        model.item_bias_,
        model.user_factors_.ravel(order="C"),
        model.item_factors_.ravel(order="C"),
    ]).astype(_F8).tobytes()
    body = MAGIC + _U64.pack(len(head)) + head + payload
    return body + _U64.pack(len(body))


def loads_model(data: bytes) -> tuple[MatrixFactorization, Optional[FeatureVocabulary], dict]:
    """Inverse of ``dumps_model``; returns ``(model, vocab, header)``."""
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"not a model artifact (magic {data[:8]!r})")
    if len(data) < 16:
        raise TruncatedPayload("header length missing")
    (hlen,) = _U64.unpack_from(data, 8)
    if len(data) < 16 + hlen:
        raise TruncatedPayload("header cut short")
    try:
        header = json.loads(data[16 : 16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ChecksumMismatch(f"header unreadable: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise UnsupportedVersion(f"format_version {header.get('format_version')!r}")
    c = header["counts"]
    nu, ni, f = c["n_users"], c["n_items"], c["n_factors"]
    n_values = 1 + nu + ni + nu * f + ni * f
    start = 16 + hlen
    end = start + 8 * n_values
    if len(data) < end + 8:
        raise TruncatedPayload(f"expected {end + 8} bytes, found {len(data)}")
    (stored,) = _U64.unpack_from(data, end)
    if len(data) != end + 8 or stored != end:
        raise ChecksumMismatch(f"footer {stored} does not match body length {end}")
    values = np.frombuffer(data, dtype=_F8, count=n_values, offset=start).astype(np.float64)
    o = 1
    bu = values[o : o + nu]; o += nu
    bi = values[o : o + ni]; o += ni
    P = values[o : o + nu * f].reshape(nu, f); o += nu * f
    Q = values[o : o + ni * f].reshape(ni, f)
    model = MatrixFactorization.from_parameters(
        global_mean=values[0], user_bias=bu.copy(), item_bias=bi.copy(),
        user_factors=P.copy(), item_factors=Q.copy(),
        user_ids=header["user_ids"], item_ids=header["item_ids"], scale=header["scale"],
        item_popularity=header.get("item_popularity"),
        training_rmse=header.get("training_rmse", ()),
        **header["hyperparameters"],
    )
    vocab = header.get("vocabulary")
    return model, (FeatureVocabulary.from_dict(vocab) if vocab else None), header


def save_model(model: MatrixFactorization, vocab: Optional[FeatureVocabulary], path,
               extra: Optional[dict] = None) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps_model(model, vocab, extra))
    os.replace(tmp, path)


def load_model(path) -> tuple[MatrixFactorization, Optional[FeatureVocabulary]]:
    model, vocab, _ = loads_model(Path(path).read_bytes())
    return model, vocab
