"""Live-campaign advisor: in-memory sessions exposed over HTTP + JSON.

A campaign holds an alternative pool and the current belief.  The operator
asks for a recommendation, performs the experiment offline, posts the +/-1
outcome, and repeats; the implementation endpoint reports the current best
pick.  Campaigns live in memory only; the history endpoint exports every
recorded step in the results-CSV schema so a session can be resumed by
replaying it into a fresh campaign.

Endpoints
    POST /campaigns                      {"lambda", "seed", "alternatives" | "dataset_path", "intercept"} -> {"id"}
    GET  /campaigns/{id}                 pool and belief snapshot (used by the dashboard)
    GET  /campaigns/{id}/recommendation  {"chosen", "scores", "pos_prob"}
    POST /campaigns/{id}/observations    {"alternative_id", "label"} -> {"mean", "precision", "n"}
    GET  /campaigns/{id}/implementation  {"alternative_id", "probability"}
    GET  /campaigns/{id}/history         results-CSV schema as JSON rows

Unknown campaign ids give 404; malformed bodies give 422.  Writes to one
campaign are serialized by a per-campaign lock, so observations apply in a
total order and reads see a consistent snapshot.
"""

from __future__ import annotations

import json
import mimetypes
import os
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

import numpy as np

from .belief import Alternative, BeliefState, Observation, map_update_single, predictive_prob
from .policies import KgScoreReport, implementation_decision, kg_select

__all__ = ["AdvisorService", "UnknownCampaign", "RequestError", "make_server"]


class UnknownCampaign(KeyError):
    """No campaign with the given id."""


class RequestError(ValueError):
    """The request body failed validation."""


@dataclass
class Campaign:
    id: str
    pool: list[Alternative]
    state: BeliefState
    rng: np.random.Generator
    history: list[Observation] = field(default_factory=list)
    history_rows: list[dict] = field(default_factory=list)
    cached_report: Optional[KgScoreReport] = None
    cached_at: int = -1
    lock: threading.Lock = field(default_factory=threading.Lock)


def _parse_pool(body: dict, intercept: bool) -> list[Alternative]:
    alternatives = body.get("alternatives")
    dataset_path = body.get("dataset_path")
    if (alternatives is None) == (dataset_path is None):
        raise RequestError("provide exactly one of 'alternatives' or 'dataset_path'")
    if dataset_path is not None:
        from .dataio import DatasetError, load_csv

        try:
            return load_csv(str(dataset_path), label_column=None, intercept=intercept).alternatives
        except DatasetError as exc:
            raise RequestError(str(exc)) from exc
    if not isinstance(alternatives, list) or not alternatives:
        raise RequestError("'alternatives' must be a non-empty list of feature rows")
    rows = []
    for i, row in enumerate(alternatives):
        if not isinstance(row, list) or not row:
            raise RequestError(f"alternative {i} must be a non-empty list of numbers")
        try:
            feats = [float(v) for v in row]
        except (TypeError, ValueError):
            raise RequestError(f"alternative {i} contains a non-numeric value") from None
        rows.append(feats)
    if len({len(r) for r in rows}) != 1:
        raise RequestError("all alternatives must share one feature dimension")
    feats = np.array(rows, dtype=float)
    if not np.all(np.isfinite(feats)):
        raise RequestError("alternative features must be finite")
    if intercept:
        feats = np.hstack([np.ones((feats.shape[0], 1)), feats])
    return [Alternative(i, feats[i]) for i in range(feats.shape[0])]


class AdvisorService:
    """Campaign store plus the request logic, independent of any transport."""

    def __init__(self):
        self._campaigns: dict[str, Campaign] = {}
        self._lock = threading.Lock()
        self._next = 1

    def _get(self, campaign_id: str) -> Campaign:
        with self._lock:
            campaign = self._campaigns.get(campaign_id)
        if campaign is None:
            raise UnknownCampaign(campaign_id)
        return campaign

    def create_campaign(self, body: dict) -> dict:
        if not isinstance(body, dict):
            raise RequestError("body must be a JSON object")
        try:
            lam = float(body.get("lambda", 1.0))
        except (TypeError, ValueError):
            raise RequestError("'lambda' must be a number") from None
        if not lam > 0 or not np.isfinite(lam):
            raise RequestError("'lambda' must be a positive finite number")
        try:
            seed = int(body.get("seed", 0))
        except (TypeError, ValueError):
            raise RequestError("'seed' must be an integer") from None
        intercept = bool(body.get("intercept", True))
        pool = _parse_pool(body, intercept)
        dim = pool[0].dim
        state = BeliefState(np.zeros(dim), np.full(dim, lam))
        with self._lock:
            cid = f"c{self._next:06d}"
            self._next += 1
            self._campaigns[cid] = Campaign(
                id=cid,
                pool=pool,
                state=state,
                rng=np.random.default_rng(seed & ((1 << 64) - 1)),
            )
        return {"id": cid}

    def campaign_info(self, campaign_id: str) -> dict:
        campaign = self._get(campaign_id)
        with campaign.lock:
            return {
                "id": campaign.id,
                "alternatives": [alt.features.tolist() for alt in campaign.pool],
                "mean": campaign.state.mean.tolist(),
                "precision": campaign.state.precision.tolist(),
                "n": len(campaign.history),
            }

    def recommendation(self, campaign_id: str) -> dict:
        campaign = self._get(campaign_id)
        with campaign.lock:
            if campaign.cached_report is None or campaign.cached_at != len(campaign.history):
                campaign.cached_report = kg_select(campaign.state, campaign.pool, campaign.rng)
                campaign.cached_at = len(campaign.history)
            report = campaign.cached_report
            return {
                "chosen": int(report.chosen),
                "scores": report.scores.tolist(),
                "pos_prob": report.pos_prob.tolist(),
            }

    def record_observation(self, campaign_id: str, body: dict) -> dict:
        if not isinstance(body, dict):
            raise RequestError("body must be a JSON object")
        campaign = self._get(campaign_id)
        try:
            alt_id = int(body["alternative_id"])
            label = int(body["label"])
        except (KeyError, TypeError, ValueError):
            raise RequestError("body must carry integer 'alternative_id' and 'label'") from None
        if label not in (-1, 1):
            raise RequestError("'label' must be -1 or +1")
        with campaign.lock:
            by_id = {alt.id: alt for alt in campaign.pool}
            if alt_id not in by_id:
                raise RequestError(f"unknown alternative_id {alt_id}")
            obs = Observation(by_id[alt_id], label)
            campaign.state = map_update_single(campaign.state, obs)
            campaign.history.append(obs)
            campaign.cached_report = None
            campaign.history_rows.append(
                {
                    "policy": "live",
                    "replication": 0,
                    "step": len(campaign.history),
                    "selected_id": alt_id,
                    "observed_label": label,
                    "impl_id": implementation_decision(campaign.state, campaign.pool),
                    # Truth is unknown in a live campaign; the schema slot is 0.
                    "oc": 0.0,
                }
            )
            return {
                "mean": campaign.state.mean.tolist(),
                "precision": campaign.state.precision.tolist(),
                "n": len(campaign.history),
            }

    def implementation(self, campaign_id: str) -> dict:
        campaign = self._get(campaign_id)
        with campaign.lock:
            impl = implementation_decision(campaign.state, campaign.pool)
            alt = next(a for a in campaign.pool if a.id == impl)
            return {
                "alternative_id": int(impl),
                "probability": predictive_prob(campaign.state, alt),
            }

    def history(self, campaign_id: str) -> list[dict]:
        campaign = self._get(campaign_id)
        with campaign.lock:
            return [dict(row) for row in campaign.history_rows]


class _Handler(BaseHTTPRequestHandler):
    server_version = "kglogit-advisor/0.1"

    @property
    def service(self) -> AdvisorService:
        return self.server.service  # type: ignore[attr-defined]

    def _send_json(self, status: int, payload) -> None:
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise RequestError("empty request body")
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise RequestError(f"invalid JSON body: {exc}") from exc

    def _dispatch(self, method: str) -> None:
        path = self.path.split("?", 1)[0].rstrip("/") or "/"
        parts = [p for p in path.split("/") if p]
        try:
            if method == "POST" and parts == ["campaigns"]:
                self._send_json(200, self.service.create_campaign(self._read_body()))
            elif len(parts) >= 2 and parts[0] == "campaigns":
                cid = parts[1]
                tail = parts[2:]
                if method == "GET" and tail == []:
                    self._send_json(200, self.service.campaign_info(cid))
                elif method == "GET" and tail == ["recommendation"]:
                    self._send_json(200, self.service.recommendation(cid))
                elif method == "GET" and tail == ["implementation"]:
                    self._send_json(200, self.service.implementation(cid))
                elif method == "GET" and tail == ["history"]:
                    self._send_json(200, self.service.history(cid))
                elif method == "POST" and tail == ["observations"]:
                    self._send_json(200, self.service.record_observation(cid, self._read_body()))
                else:
                    self._send_json(404, {"error": f"no route {method} {path}"})
            elif method == "GET" and self._try_static(path):
                pass
            else:
                self._send_json(404, {"error": f"no route {method} {path}"})
        except UnknownCampaign as exc:
            self._send_json(404, {"error": f"unknown campaign {exc.args[0]!r}"})
        except RequestError as exc:
            self._send_json(422, {"error": str(exc)})

    def _try_static(self, path: str) -> bool:
        static_dir = getattr(self.server, "static_dir", None)
        if not static_dir:
            return False
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(static_dir, rel))
        root = os.path.realpath(static_dir)
        if not full.startswith(root + os.sep) and full != root:
            return False
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not os.path.isfile(full):
            return False
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            data = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)
        return True

    def do_GET(self):  # noqa: N802 (http.server API)
        self._dispatch("GET")

    def do_POST(self):  # noqa: N802
        self._dispatch("POST")


def make_server(
    service: Optional[AdvisorService] = None,
    bind: str = "127.0.0.1",
    port: int = 8080,
    static_dir: Optional[str] = None,
) -> ThreadingHTTPServer:
    """Build (but do not start) the threaded HTTP server for a service."""
    server = ThreadingHTTPServer((bind, port), _Handler)
    server.service = service or AdvisorService()  # type: ignore[attr-defined]
    server.static_dir = static_dir  # type: ignore[attr-defined]
    return server
