"""Scoring backends: a bigram count model and a transformers causal LM.

A backend tokenizes a text, truncates to the requested token budget, and
returns natural-log conditional probabilities for every scoreable position.
Positions the model cannot condition (the leading token) carry no logprob,
so len(logprobs) == len(tokens) - 1 whenever the first token is unscoreable.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from pathlib import Path
from typing import Iterable, Protocol

OOV = "<unk>"


class Backend(Protocol):
    model_id: str

    def score(self, text: str, max_tokens: int) -> tuple[list[str], list[float]]: ...


class CountModelBackend:
    """Add-alpha smoothed bigram model over lowercase whitespace tokens.

    Kept at order two on purpose: exactly the first token of a request is
    unscoreable, which is the length contract the wire protocol states.
    """

    def __init__(self, train_docs: Iterable[str], alpha: float = 0.1, model_id: str | None = None):
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        self.alpha = alpha
        self._pair_counts: Counter = Counter()
        self._prefix_counts: Counter = Counter()
        words: set[str] = set()
        n_docs = 0
        for doc in train_docs:
            tokens = doc.lower().split()
            if not tokens:
                continue
            n_docs += 1
            words.update(tokens)
            for left, right in zip(tokens, tokens[1:]):
                self._pair_counts[(left, right)] += 1
                self._prefix_counts[left] += 1
        if n_docs == 0:
            raise ValueError("count-model backend needs non-empty training text")
        self._words = words
        self.vocab_size = len(words) + 1  # plus the out-of-vocabulary symbol
        self.model_id = model_id or f"countlm-bigram-alpha{alpha:g}"

    def score(self, text: str, max_tokens: int) -> tuple[list[str], list[float]]:
        tokens = text.lower().split()[:max_tokens]
        known = self._words
        mapped = [t if t in known else OOV for t in tokens]
        smooth = self.alpha * self.vocab_size
        logprobs = []
        for left, right in zip(mapped, mapped[1:]):
            p = (self._pair_counts[(left, right)] + self.alpha) / (
                self._prefix_counts[left] + smooth
            )
            logprobs.append(math.log(p))
        return tokens, logprobs


class HfCausalBackend:
    """Wraps a local transformers causal LM; heavy imports stay lazy."""

    def __init__(self, model_path: str, device: str = "cpu"):
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_path)
        self._model = AutoModelForCausalLM.from_pretrained(model_path).to(device).eval()
        self._device = device
        self.model_id = model_path

    def score(self, text: str, max_tokens: int) -> tuple[list[str], list[float]]:
        torch = self._torch
        ids = self._tokenizer.encode(text, add_special_tokens=False)[:max_tokens]
        tokens = self._tokenizer.convert_ids_to_tokens(ids)
        if len(ids) < 2:
            return tokens, []
        with torch.no_grad():
            batch = torch.tensor([ids], device=self._device)
            logits = self._model(batch).logits[0]
        logprobs = torch.log_softmax(logits[:-1].float(), dim=-1)
        picked = logprobs[torch.arange(len(ids) - 1), torch.tensor(ids[1:])]
        return tokens, [float(x) for x in picked]


def backend_from_spec(spec: str, device: str = "cpu") -> Backend:
    """Build a backend from "countlm:<train-file>[:alpha]" or "hf:<model-path>"."""
    kind, sep, rest = spec.partition(":")
    if not sep:
        raise ValueError(f"bad backend spec {spec!r}")
    if kind == "countlm":
        path, _, alpha_tok = rest.rpartition(":")
        if not path:
            path, alpha_tok = rest, ""
        alpha = float(alpha_tok) if alpha_tok else 0.1
        docs = _load_training_texts(Path(path))
        return CountModelBackend(docs, alpha=alpha, model_id=f"countlm:{Path(path).name}")
    if kind == "hf":
        return HfCausalBackend(rest, device=device)
    raise ValueError(f"unknown backend kind {kind!r}")


def _load_training_texts(path: Path) -> list[str]:
    """Accepts line-delimited JSON with a "text" field, or plain text lines."""
    texts = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("{"):
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    texts.append(line)
                    continue
                if isinstance(rec, dict) and "text" in rec:
                    texts.append(rec["text"])
            else:
                texts.append(line)
    return texts
