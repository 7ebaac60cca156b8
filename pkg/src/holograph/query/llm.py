# -*- coding: utf-8 -*-
"""Client of an OpenAI-compatible chat-completions endpoint, used as oracle."""
import dataclasses
import datetime
import json
import logging
import os
import re
import time
import urllib.error
import urllib.request
from collections.abc import Callable, Sequence
from typing import Optional

from ..io import JsonLinesWriter
from .oracle import Budget, OracleAnswer, QueryCandidate, QueryKind

logger = logging.getLogger(__name__)

Transport = Callable[[str, dict, dict, float], dict]

TEMPLATES = {
    QueryKind.EDGE_EXISTENCE: "Does {a} directly cause {b}?",
    QueryKind.DIRECTION: (
        "{a} and {b} are causally related. Is the direction {a} -> {b} "
        "(answer yes) rather than {b} -> {a} (answer no)?"
    ),
    QueryKind.MECHANISM: "Is there a direct causal mechanism through which {a} influences {b}?",
    QueryKind.CONFOUNDER: "Do {a} and {b} share an unobserved common cause?",
}
INSTRUCTIONS = (
    " Start your answer with yes or no, then state your confidence as high, "
    "medium or low."
)
REPROMPT = "Reply with a single word, yes or no. "

CONFIDENCE_WORDS = {"high": 1.0, "medium": 0.6, "low": 0.3}

_VERDICT = re.compile(r"\b(yes|no)\b", re.IGNORECASE)
_CONFIDENCE = re.compile(
    r"confidence\W{0,3}(high|medium|low|\d+(?:\.\d+)?\s*%?)"
    r"|\b(high|medium|low)\s+confidence",
    re.IGNORECASE,
)


class OracleUnavailable(ConnectionError):
    """The endpoint could not be reached after all retries."""


@dataclasses.dataclass(frozen=True)
class EndpointConfig:
    """Chat-completions endpoint.

    Only the name of the environment variable holding the API key is stored.

    """

    base_url: str = "http://localhost:8000/v1"
    model: str = "default"
    fast_model: Optional[str] = None
    api_key_env: str = "HOLOGRAPH_API_KEY"
    temperature: float = 0.1
    max_tokens: int = 4096
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 1.0
    audit_path: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> "EndpointConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def parse_reply(text: str) -> tuple[Optional[bool], float]:
    """Verdict and stated confidence of a reply.

    The first yes/no token is the verdict (``None`` if absent). Confidence is
    read from ``high``/``medium``/``low`` or a number, a percentage when above
    one; without any statement it is full.

    """
    verdict = _VERDICT.search(text)
    if verdict is None:
        return None, 0.0

    confidence = 1.0
    stated = _CONFIDENCE.search(text)
    if stated is not None:
        value = (stated.group(1) or stated.group(2)).strip().lower()
        if value in CONFIDENCE_WORDS:
            confidence = CONFIDENCE_WORDS[value]
        else:
            number = float(value.rstrip("%").strip())
            if value.endswith("%") or number > 1.0:
                number /= 100.0
            confidence = min(max(number, 0.0), 1.0)
    return verdict.group(1).lower() == "yes", confidence


def render_prompt(query: QueryCandidate, names: Optional[Sequence[str]] = None) -> str:
    a = names[query.i] if names is not None else f"variable X{query.i}"
    b = names[query.j] if names is not None else f"variable X{query.j}"
    return TEMPLATES[query.kind].format(a=a, b=b) + INSTRUCTIONS


def urllib_transport(url: str, payload: dict, headers: dict, timeout: float) -> dict:
    request = urllib.request.Request(
        url,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json", **headers},
        method="POST",
    )
    with urllib.request.urlopen(request, timeout=timeout) as response:
        return json.loads(response.read().decode("utf-8"))


class LLMOracle:
    """Budgeted oracle answering through a chat-completions endpoint.

    Parameters
    ----------
    endpoint: EndpointConfig
        where and how to ask
    budget: Budget
        one query is reserved before every request, reprompts included
    names: sequence(str) or None
        variable names used in prompts, indexed by variable id
    fast: bool
        use ``endpoint.fast_model`` instead of ``endpoint.model``
    transport: callable or None
        ``transport(url, payload, headers, timeout) -> dict``, `urllib_transport`
        by default
    sleep: callable
        waiting function between retries

    """

    def __init__(
        self,
        endpoint: EndpointConfig,
        budget: Budget,
        names: Optional[Sequence[str]] = None,
        fast: bool = False,
        transport: Optional[Transport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint
        self.budget = budget
        self.names = names
        self.model = endpoint.fast_model if fast and endpoint.fast_model else endpoint.model
        self.transport = urllib_transport if transport is None else transport
        self.sleep = sleep
        self._audit = (
            JsonLinesWriter(endpoint.audit_path, flush_every=1, append=True)
            if endpoint.audit_path is not None
            else None
        )

    def _headers(self) -> dict:
        key = os.environ.get(self.endpoint.api_key_env)
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _send(self, prompt: str) -> dict:
        url = self.endpoint.base_url.rstrip("/") + "/chat/completions"
        payload = dict(
            model=self.model,
            messages=[dict(role="user", content=prompt)],
            temperature=self.endpoint.temperature,
            max_tokens=self.endpoint.max_tokens,
        )
        errors = []
        for attempt in range(self.endpoint.retries + 1):
            if attempt > 0:
                self.sleep(self.endpoint.backoff * 2 ** (attempt - 1))
            try:
                response = self.transport(url, payload, self._headers(), self.endpoint.timeout)
            except (urllib.error.URLError, OSError, ValueError) as err:
                errors.append(f"{type(err).__name__}: {err}")
                logger.warning("Request to %s failed (attempt %d): %s", url, attempt + 1, err)
                continue
            if self._audit is not None:
                self._audit.write(
                    dict(
                        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
                        request=payload,
                        response=response,
                        tokens=_tokens(response),
                    )
                )
            return response
        raise OracleUnavailable(f"Endpoint {url} unavailable: {'; '.join(errors)}")

    def __call__(self, query: QueryCandidate) -> OracleAnswer:
        prompt = render_prompt(query, self.names)
        tokens = 0
        text = ""
        for prompt in (prompt, REPROMPT + prompt):
            self.budget.reserve(query.kind)
            response = self._send(prompt)
            used = _tokens(response)
            self.budget.charge(used)
            tokens += used
            text = _content(response)
            verdict, confidence = parse_reply(text)
            logger.debug("Query %s(%d, %d): %r", query.kind.value, query.i, query.j, text)
            if verdict is not None:
                shift = 0.45 * confidence
                return OracleAnswer(
                    0.5 + shift if verdict else 0.5 - shift, confidence, tokens, text
                )
        logger.warning(
            "No verdict for %s(%d, %d), answering neutrally", query.kind.value, query.i, query.j
        )
        return OracleAnswer(0.5, 0.0, tokens, text)

    def close(self):
        if self._audit is not None:
            self._audit.close()


def _tokens(response: dict) -> int:
    usage = response.get("usage") or {}
    return int(usage.get("total_tokens", 0))


def _content(response: dict) -> str:
    try:
        return response["choices"][0]["message"]["content"] or ""
    except (KeyError, IndexError, TypeError):
        return ""


def llm_oracle(
    query: QueryCandidate,
    endpoint: EndpointConfig,
    budget: Budget,
    transport: Optional[Transport] = None,
) -> OracleAnswer:
    """Single-shot form of `LLMOracle`."""
    oracle = LLMOracle(endpoint, budget, transport=transport)
    try:
        return oracle(query)
    finally:
        oracle.close()
