"""Instance and report files: one JSON schema for every preset.

Instances carry the facility list, the facility geometry (numeric matrix
or per-candidate ordinal rankings, at least one required), agent
preferences (full rankings or top choices), a problem preset with its
parameters, and optionally a true metric plus named adversarial
scenarios.  Serialization is canonical, so parse/serialize round-trips
are byte-identical and reports can embed a digest of the instance they
describe.  Infinite ratios serialize as the string "inf".
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import PRESET_NAMES, build_preset
from .audit import AuditReport
from .core import (FacilityDistances, FacilitySet, FullMetric,
                   PreferenceProfile, facility_distances)
from .errors import (InvalidCostError, MetricError, ProfileError,
                     SchemaError, SolverError)
from .gallery import WorkedExample, Scenario

SCHEMA_INSTANCE = "ordmech-instance-v1"
SCHEMA_REPORT = "ordmech-report-v1"
SCHEMA_AUDIT = "ordmech-audit-v1"


@dataclass(frozen=True)
class InstanceFile:
    facilities: FacilitySet
    profile: PreferenceProfile
    preset: str
    fd: FacilityDistances | None = None
    candidate_rankings: tuple[tuple[int, ...], ...] | None = None
    params: dict = field(default_factory=dict)
    metric: FullMetric | None = None
    scenarios: tuple[Scenario, ...] = ()

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def m(self) -> int:
        return self.facilities.m


def _expect(condition: bool, message: str, fieldname: str):
    if not condition:
        raise SchemaError(message, field=fieldname)


def _matrix(raw, fieldname: str) -> np.ndarray:
    _expect(isinstance(raw, list) and raw
            and all(isinstance(r, list) for r in raw), "must be a matrix", fieldname)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError("entries must be numbers", field=fieldname) from None
    _expect(arr.ndim == 2, "must be two-dimensional", fieldname)
    _expect(bool(np.isfinite(arr).all()), "entries must be finite", fieldname)
    return arr


def _facility_index(names: FacilitySet, raw, fieldname: str) -> int:
    _expect(isinstance(raw, str), "facility references are names", fieldname)
    try:
        return names.index(raw)
    except MetricError:
        raise SchemaError(f"unknown facility {raw!r}", field=fieldname) from None


def parse_instance(text: str) -> InstanceFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
            field="<document>") from None
    return instance_from_dict(data)


def instance_from_dict(data) -> InstanceFile:
    _expect(isinstance(data, dict), "instance must be a JSON object", "<document>")
    _expect(data.get("schema") == SCHEMA_INSTANCE,
            f"schema must be {SCHEMA_INSTANCE!r}", "schema")
    raw_names = data.get("facilities")
    _expect(isinstance(raw_names, list) and raw_names
            and all(isinstance(s, str) for s in raw_names),
            "must be a nonempty list of names", "facilities")
    try:
        facilities = FacilitySet(tuple(raw_names))
    except MetricError as exc:
        raise SchemaError(str(exc), field="facilities") from None
    m = facilities.m

    fd = None
    if "facility_distances" in data:
        arr = _matrix(data["facility_distances"], "facility_distances")
        _expect(arr.shape == (m, m), f"must be {m}x{m}", "facility_distances")
        try:
            fd = FacilityDistances(facilities, arr)
        except MetricError as exc:
            raise SchemaError(str(exc), field="facility_distances") from None

    candidate_rankings = None
    if "candidate_rankings" in data:
        raw = data["candidate_rankings"]
        _expect(isinstance(raw, dict), "must map facility to ranking",
                "candidate_rankings")
        _expect(set(raw) == set(facilities.names),
                "must rank every facility exactly once", "candidate_rankings")
        rankings = []
        for f, name in enumerate(facilities.names):
            entry = raw[name]
            _expect(isinstance(entry, list), "ranking must be a list",
                    f"candidate_rankings.{name}")
            idx = tuple(_facility_index(facilities, g, f"candidate_rankings.{name}")
                        for g in entry)
            _expect(sorted(idx) == sorted(set(range(m)) - {f}),
                    "must order all other facilities", f"candidate_rankings.{name}")
            rankings.append(idx)
        candidate_rankings = tuple(rankings)

    _expect(fd is not None or candidate_rankings is not None,
            "need facility_distances or candidate_rankings",
            "facility_distances")

    has_full = "preferences" in data
    has_tops = "tops" in data
    _expect(has_full != has_tops, "give exactly one of preferences / tops",
            "preferences")
    if has_full:
        raw = data["preferences"]
        _expect(isinstance(raw, list) and raw, "must be a nonempty list",
                "preferences")
        rankings = []
        for i, entry in enumerate(raw):
            _expect(isinstance(entry, list), "ranking must be a list",
                    f"preferences[{i}]")
            rankings.append(tuple(_facility_index(facilities, g, f"preferences[{i}]")
                                  for g in entry))
        try:
            profile = PreferenceProfile(m, tuple(rankings))
        except ProfileError as exc:
            raise SchemaError(str(exc), field="preferences") from None
    else:
        raw = data["tops"]
        _expect(isinstance(raw, list) and raw, "must be a nonempty list", "tops")
        tops = tuple((_facility_index(facilities, g, "tops"),) for g in raw)
        profile = PreferenceProfile(m, tops, top_only=True)

    preset = data.get("preset")
    _expect(preset in PRESET_NAMES,
            f"preset must be one of {list(PRESET_NAMES)}", "preset")
    params = data.get("params", {})
    _expect(isinstance(params, dict), "must be an object", "params")
    if preset != "social_choice_median":  # has no assignment-framework form
        try:
            build_preset(preset, profile.n, facilities, params)
        except (InvalidCostError, SolverError) as exc:
            raise SchemaError(str(exc), field="params") from None

    metric = None
    if data.get("metric") is not None:
        _expect(fd is not None, "a true metric needs facility_distances", "metric")
        arr = _matrix(data["metric"], "metric")
        _expect(arr.shape == (profile.n, m), f"must be {profile.n}x{m}", "metric")
        try:
            metric = FullMetric(arr, fd)
        except MetricError as exc:
            raise SchemaError(str(exc), field="metric") from None

    scenarios = []
    for s, raw_scen in enumerate(data.get("scenarios", ())):
        where = f"scenarios[{s}]"
        _expect(isinstance(raw_scen, dict), "must be an object", where)
        label = raw_scen.get("label")
        _expect(isinstance(label, str) and label, "needs a label", f"{where}.label")
        for required in ("facility_distances", "metric"):
            _expect(required in raw_scen, "is required", f"{where}.{required}")
        arr = _matrix(raw_scen["facility_distances"], f"{where}.facility_distances")
        try:
            scen_fd = FacilityDistances(facilities, arr)
            scen_metric = FullMetric(
                _matrix(raw_scen["metric"], f"{where}.metric"), scen_fd)
        except MetricError as exc:
            raise SchemaError(str(exc), field=where) from None
        assignment = None
        choice = None
        if raw_scen.get("assignment") is not None:
            assignment = tuple(_facility_index(facilities, g, f"{where}.assignment")
                               for g in raw_scen["assignment"])
            _expect(len(assignment) == profile.n, "one facility per agent",
                    f"{where}.assignment")
        if raw_scen.get("choice") is not None:
            choice = tuple(_facility_index(facilities, g, f"{where}.choice")
                           for g in raw_scen["choice"])
        expected = raw_scen.get("expected_ratio")
        scenarios.append(Scenario(label, scen_fd, scen_metric,
                                  raw_scen.get("note", ""), assignment, choice,
                                  expected))

    return InstanceFile(facilities, profile, preset, fd, candidate_rankings,
                        params, metric, tuple(scenarios))


def _matrix_out(arr: np.ndarray) -> list:
    return [[float(v) for v in row] for row in arr]


def instance_to_dict(inst: InstanceFile) -> dict:
    names = inst.facilities.names
    out: dict = {"schema": SCHEMA_INSTANCE, "facilities": list(names)}
    if inst.fd is not None:
        out["facility_distances"] = _matrix_out(inst.fd.values)
    if inst.candidate_rankings is not None:
        out["candidate_rankings"] = {
            names[f]: [names[g] for g in ranking]
            for f, ranking in enumerate(inst.candidate_rankings)}
    if inst.profile.top_only:
        out["tops"] = [names[r[0]] for r in inst.profile.rankings]
    else:
        out["preferences"] = [[names[g] for g in r] for r in inst.profile.rankings]
    out["preset"] = inst.preset
    if inst.params:
        out["params"] = inst.params
    if inst.metric is not None:
        out["metric"] = _matrix_out(inst.metric.distances)
    if inst.scenarios:
        out["scenarios"] = []
        for scen in inst.scenarios:
            entry = {
                "label": scen.label,
                "facility_distances": _matrix_out(scen.fd.values),
                "metric": _matrix_out(scen.metric.distances),
            }
            if scen.assignment is not None:
                entry["assignment"] = [names[f] for f in scen.assignment]
            if scen.choice is not None:
                entry["choice"] = [names[f] for f in scen.choice]
            if scen.note:
                entry["note"] = scen.note
            if scen.expected_ratio is not None:
                entry["expected_ratio"] = float(scen.expected_ratio)
            out["scenarios"].append(entry)
    return out


def serialize_instance(inst: InstanceFile) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def instance_digest(inst: InstanceFile) -> str:
    canonical = json.dumps(instance_to_dict(inst), sort_keys=True,
                           separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


def example_to_instance(example: WorkedExample) -> InstanceFile:
    return InstanceFile(example.facilities, example.profile, example.preset,
                        example.fd, None, dict(example.preset_params),
                        example.metric, example.scenarios)


def _number_out(value: float):
    if value is None:
        return None
    if math.isinf(value):
        return "inf"
    return float(value)


def _outcome_out(target, names) -> dict:
    if isinstance(target, (int, np.integer)):
        return {"winner": names[int(target)]}
    return {"assignment": [names[f] for f in target]}


def audit_report_to_dict(report: AuditReport, inst: InstanceFile) -> dict:
    names = inst.facilities.names
    return {
        "schema": SCHEMA_AUDIT,
        "instance_digest": instance_digest(inst),
        "objective": report.objective,
        "alpha": report.alpha,
        "outcome": _outcome_out(report.target, names),
        "value": _number_out(report.value),
        "exact": report.exact,
        "per_alternative": [
            {"alternative": _outcome_out(alt, names), "ratio": _number_out(ratio)}
            for alt, ratio in report.per_alternative],
        "witness_metric": (None if report.witness is None
                           else _matrix_out(report.witness.distances)),
        "witness_ratio": _number_out(report.witness_ratio),
        "flags": list(report.flags),
    }


def solve_report_to_dict(inst: InstanceFile, mechanism: str, target,
                         beta: float | None, exact: bool | None,
                         guarantee: dict, audit: dict | None = None) -> dict:
    return {
        "schema": SCHEMA_REPORT,
        "instance_digest": instance_digest(inst),
        "mechanism": mechanism,
        "outcome": _outcome_out(target, inst.facilities.names),
        "beta": beta,
        "exact": exact,
        "guarantee": guarantee,
        "audit": audit,
    }


def load_instance(path) -> InstanceFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(inst: InstanceFile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_instance(inst))


def save_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
