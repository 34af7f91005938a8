"""JSON encodings for markets, matchings, traces and transitions."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Union

from .algorithms import SOTrace
from .market import ExplicitSubsets, FirmPreference, Market, MarketError, Matching, Responsive


class ParseError(ValueError):
    """Input text or JSON structure that cannot be turned into domain objects."""


def _expect_keys(obj: Any, required: set[str], optional: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    keys = set(obj)
    missing = required - keys
    if missing:
        raise ParseError(f"{where}: missing keys {sorted(missing)}")
    unknown = keys - required - optional
    if unknown:
        raise ParseError(f"{where}: unknown keys {sorted(unknown)}")


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{where}: expected an integer, got {value!r}")
    return value


def _int_list(value: Any, where: str) -> list[int]:
    if not isinstance(value, list):
        raise ParseError(f"{where}: expected a list")
    return [_int(v, where) for v in value]


def firm_from_json(obj: Any, extra: frozenset[str] = frozenset()) -> tuple[int, FirmPreference]:
    _expect_keys(obj, {"id", "quota"}, {"ranking", "subset_order"} | extra, "firm")
    fid = _int(obj["id"], "firm id")
    quota = _int(obj["quota"], f"firm {fid} quota")
    if ("ranking" in obj) == ("subset_order" in obj):
        raise ParseError(f"firm {fid}: give exactly one of 'ranking' or 'subset_order'")
    try:
        if "ranking" in obj:
            return fid, Responsive(quota, tuple(_int_list(obj["ranking"], f"firm {fid} ranking")))
        if not isinstance(obj["subset_order"], list):
            raise ParseError(f"firm {fid}: subset_order must be a list")
        order = tuple(frozenset(_int_list(s, f"firm {fid} subset")) for s in obj["subset_order"])
        return fid, ExplicitSubsets(quota, order)
    except MarketError as exc:
        raise ParseError(f"firm {fid}: {exc}") from exc


def firm_to_json(fid: int, pref: FirmPreference) -> dict:
    if isinstance(pref, Responsive):
        return {"id": fid, "quota": pref.quota, "ranking": list(pref.ranking)}
    assert isinstance(pref, ExplicitSubsets)
    return {"id": fid, "quota": pref.quota, "subset_order": [sorted(s) for s in pref.order]}


def market_from_json(obj: Any) -> Market:
    _expect_keys(obj, {"firms", "workers"}, set(), "market")
    if not isinstance(obj["firms"], list) or not isinstance(obj["workers"], list):
        raise ParseError("market: 'firms' and 'workers' must be lists")
    firms = {}
    for item in obj["firms"]:
        fid, pref = firm_from_json(item)
        if fid in firms:
            raise ParseError(f"duplicate firm id {fid}")
        firms[fid] = pref
    workers = {}
    for item in obj["workers"]:
        _expect_keys(item, {"id", "ranking"}, set(), "worker")
        wid = _int(item["id"], "worker id")
        if wid in workers:
            raise ParseError(f"duplicate worker id {wid}")
        workers[wid] = tuple(_int_list(item["ranking"], f"worker {wid} ranking"))
    try:
        return Market(firms, workers)
    except MarketError as exc:
        raise ParseError(str(exc)) from exc


def market_to_json(market: Market) -> dict:
    return {
        "firms": [firm_to_json(f, p) for f, p in market.firms.items()],
        "workers": [{"id": w, "ranking": list(r)} for w, r in market.workers.items()],
    }


def matching_from_json(obj: Any) -> Matching:
    _expect_keys(obj, {"assignment"}, set(), "matching")
    raw = obj["assignment"]
    if not isinstance(raw, dict):
        raise ParseError("matching: 'assignment' must be an object")
    out = {}
    for key, value in raw.items():
        try:
            w = int(key)
        except ValueError as exc:
            raise ParseError(f"matching: worker key {key!r} is not an integer") from exc
        out[w] = None if value is None else _int(value, f"partner of worker {w}")
    return Matching(out)


def matching_to_json(mu: Matching) -> dict:
    return {"assignment": {str(w): f for w, f in mu.items()}}


def _firm_sets(sets: dict) -> dict:
    return {str(f): sorted(ws) for f, ws in sorted(sets.items())}


def trace_to_json(trace: SOTrace) -> dict:
    return {
        "input": matching_to_json(trace.input),
        "iterations": [
            {
                "offers": _firm_sets(it.offers),
                "available": _firm_sets(it.available),
                "matching": matching_to_json(it.matching),
            }
            for it in trace.iterations
        ],
        "output": matching_to_json(trace.output),
    }


def dumps(obj: Any) -> str:
    """Canonical text form used for every emitted file."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_json(path: Union[str, Path]) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
