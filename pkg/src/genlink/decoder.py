"""Prefix-tree-constrained beam search with pluggable scorers.

At every step a hypothesis may only extend along trie edges, so any scorer,
however adversarial, can only ever produce names from the indexed name set.
Finished hypotheses (those that consumed the end-of-name sentinel) are set
aside and do not occupy beam slots; search stops once enough have finished,
the frontier dies out, or the length cap is hit. Decoded names map to
concepts through the name index, deduplicating concepts at the rank of
their best-scoring synonym.

Reference scorers included here: an add-k smoothed n-gram model trained on
prepared pairs, a memorizing oracle, uniform and hash-random scorers for
testing, and a subprocess bridge client speaking one JSON object per line.
"""

from __future__ import annotations

import json
import math
import shlex
import struct
import subprocess
import threading
import zlib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .errors import DecodeError, IntegrityError
from .kb import NameIndex
from .tokens import TOKENIZER_KINDS, Tokenizer
from .trainprep import extract_mention
from .trie import TokenTrie, TrieCursor

NGRAM_MAGIC = b"GNGM"
NGRAM_FORMAT_VERSION = 1


class Scorer(Protocol):
    """Behavioral contract for anything that scores candidate next tokens."""

    def score_next(
        self,
        source: Sequence[str],
        prompt: Sequence[str],
        decoded: Sequence[str],
        allowed: Sequence[str],
    ) -> list[float]:
        """Log-score per allowed token, same order, all finite.

        Must be pure given identical arguments and tolerate concurrent calls.
        """
        ...


@dataclass(frozen=True, slots=True)
class BeamHypothesis:
    tokens: tuple[str, ...]
    log_score: float
    cursor: TrieCursor
    finished: bool = False


@dataclass(frozen=True)
class Prediction:
    names: tuple[str, ...]
    cuis: tuple[str, ...]
    scores: tuple[float, ...]


def constrained_beam_search(
    source: Sequence[str],
    prompt: Sequence[str],
    trie: TokenTrie,
    scorer: Scorer,
    index: NameIndex,
    tokenizer: Tokenizer,
    beam_size: int = 5,
    max_len: int | None = None,
    length_penalty: float = 0.0,
) -> Prediction:
    """Decode up to beam_size names constrained to the trie, mapped to concepts.

    The prompt is passed through to the scorer but never constrained: it is
    context, not part of the name. Ranking is by cumulative log-score
    descending (optionally length-normalized by ``len**length_penalty``),
    ties broken by lexicographic token sequence.
    """
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    root_allowed = trie.allowed_from(trie.start())
    if not root_allowed:
        raise IntegrityError("trie has no path from its root")
    if max_len is None:
        max_len = trie.max_name_tokens + 1
    eon = trie.end_of_name

    frontier = [BeamHypothesis(tokens=(), log_score=0.0, cursor=trie.start())]
    finished: list[BeamHypothesis] = []
    for step_index in range(max_len):
        if not frontier:
            break
        if len(finished) >= beam_size:
            # Enough names finished; stop once no active hypothesis scores
            # above the k-th best finished one. With log-probability scorers
            # extensions only lower a score, so nothing better can appear.
            kth_best = sorted((h.log_score for h in finished), reverse=True)[beam_size - 1]
            if max(h.log_score for h in frontier) <= kth_best:
                break
        pool: list[tuple[float, tuple[str, ...], BeamHypothesis, str]] = []
        for hyp in frontier:
            allowed = trie.allowed_from(hyp.cursor)
            if not allowed:
                continue
            try:
                scores = scorer.score_next(source, prompt, hyp.tokens, allowed)
            except Exception as exc:
                raise DecodeError(f"scorer failed at step {step_index}: {exc}") from exc
            if len(scores) != len(allowed):
                raise DecodeError(
                    f"scorer returned {len(scores)} scores for {len(allowed)} allowed tokens "
                    f"at step {step_index}"
                )
            for token, score in zip(allowed, scores):
                if not math.isfinite(score):
                    raise DecodeError(f"non-finite score for token {token!r} at step {step_index}")
                pool.append((hyp.log_score + score, hyp.tokens + (token,), hyp, token))
        if not pool:
            break
        pool.sort(key=lambda item: (-item[0], item[1]))
        # Only the step's top-k candidates survive: finished ones are set
        # aside, active ones form the next frontier. A finished hypothesis
        # therefore frees its beam slot for expansion from the next step on,
        # and a low-scoring finisher outside the top-k cannot end the search.
        next_frontier: list[BeamHypothesis] = []
        for total, tokens, hyp, token in pool[:beam_size]:
            if token == eon:
                finished.append(BeamHypothesis(tokens=tokens, log_score=total,
                                               cursor=trie.step(hyp.cursor, token), finished=True))
            else:
                next_frontier.append(BeamHypothesis(tokens=tokens, log_score=total,
                                                    cursor=trie.step(hyp.cursor, token)))
        frontier = next_frontier

    def rank_key(hyp: BeamHypothesis):
        score = hyp.log_score
        if length_penalty:
            score = score / (len(hyp.tokens) ** length_penalty)
        return (-score, hyp.tokens)

    finished.sort(key=rank_key)
    names: list[str] = []
    scores: list[float] = []
    cuis: list[str] = []
    for hyp in finished[:beam_size]:
        name = tokenizer.detokenize(hyp.tokens)
        names.append(name)
        scores.append(hyp.log_score)
        for cui in index.concepts_of(name):
            if cui not in cuis:
                cuis.append(cui)
    return Prediction(names=tuple(names), cuis=tuple(cuis), scores=tuple(scores))


def decode_many(
    rows: Sequence[tuple[str, str, str]],
    trie: TokenTrie,
    scorer: Scorer,
    index: NameIndex,
    tokenizer: Tokenizer,
    beam_size: int = 5,
    max_len: int | None = None,
    length_penalty: float = 0.0,
    workers: int = 1,
) -> list[tuple[str, Prediction]]:
    """Decode (id, source, prompt) rows, preserving input order."""

    def one(row: tuple[str, str, str]) -> tuple[str, Prediction]:
        row_id, source, prompt = row
        prediction = constrained_beam_search(
            tokenizer.tokenize(source), tokenizer.tokenize(prompt),
            trie, scorer, index, tokenizer,
            beam_size=beam_size, max_len=max_len, length_penalty=length_penalty,
        )
        return row_id, prediction

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, rows))
    return [one(row) for row in rows]


def prediction_to_record(row_id: str, prediction: Prediction) -> dict:
    return {
        "id": row_id,
        "names": list(prediction.names),
        "cuis": list(prediction.cuis),
        "scores": list(prediction.scores),
    }


# ---------------------------------------------------------------------------
# Reference scorers
# ---------------------------------------------------------------------------


class UniformScorer:
    """log(1/|allowed|) for every candidate; the maximum-entropy baseline."""

    def score_next(self, source, prompt, decoded, allowed):
        score = -math.log(len(allowed))
        return [score] * len(allowed)


class RandomScorer:
    """Deterministic pseudo-random scores keyed by seed, position, and token.

    Pure by construction: identical arguments hash to identical scores, so
    the contract holds even though the values look arbitrary.
    """

    def __init__(self, seed: int = 0, low: float = -10.0, high: float = 0.0):
        self.seed = seed
        self.low = low
        self.high = high

    def score_next(self, source, prompt, decoded, allowed):
        tail = "␟".join(decoded[-3:])
        base = zlib.crc32(f"{self.seed}|{len(decoded)}|{tail}".encode())
        span = self.high - self.low
        out = []
        for token in allowed:
            h = zlib.crc32(token.encode(), base)
            out.append(self.low + span * (h / 0xFFFFFFFF))
        return out


class OracleScorer:
    """Memorizes source -> target tokens; scores the target path 0, all else -1e9."""

    WRONG = -1e9

    def __init__(self, lookup: Mapping[tuple[str, ...], Sequence[str]], end_of_name: str):
        self._lookup = {tuple(k): tuple(v) + (end_of_name,) for k, v in lookup.items()}

    def score_next(self, source, prompt, decoded, allowed):
        key = tuple(source)
        if key not in self._lookup:
            raise LookupError("source sequence not present in oracle lookup")
        favored = self._lookup[key]
        want = None
        if len(decoded) < len(favored) and tuple(decoded) == favored[:len(decoded)]:
            want = favored[len(decoded)]
        return [0.0 if token == want else self.WRONG for token in allowed]


def oracle_scorer(lookup: Mapping[tuple[str, ...], Sequence[str]],
                  tokenizer: Tokenizer) -> OracleScorer:
    return OracleScorer(lookup, tokenizer.specials.end_of_name)


class NgramScorer:
    """Add-k smoothed n-gram model over mention [SEP] target [EON] sequences.

    Contexts are padded with BOS so they always hold order-1 tokens; the
    conditional distribution at any context sums to 1 over the training
    vocabulary. Tokens outside the vocabulary score as unseen events.
    """

    def __init__(self, order: int = 4, k: float = 0.1, tokenizer: Tokenizer = Tokenizer()):
        if order < 1:
            raise ValueError("order must be >= 1")
        if k <= 0:
            raise ValueError("smoothing k must be positive")
        self.order = order
        self.k = k
        self.tokenizer = tokenizer
        self.counts: dict[tuple[str, ...], Counter[str]] = {}
        self.context_totals: dict[tuple[str, ...], int] = {}
        self.vocab: set[str] = set()

    def _sequence(self, mention: str, target: str) -> list[str]:
        sp = self.tokenizer.specials
        return (
            [sp.bos] * (self.order - 1)
            + self.tokenizer.tokenize(mention)
            + [sp.sep]
            + self.tokenizer.tokenize(target)
            + [sp.end_of_name]
        )

    def observe(self, mention: str, target: str) -> None:
        seq = self._sequence(mention, target)
        self.vocab.update(seq)
        n = self.order
        for i in range(n - 1, len(seq)):
            ctx = tuple(seq[i - n + 1:i])
            bucket = self.counts.setdefault(ctx, Counter())
            bucket[seq[i]] += 1
            self.context_totals[ctx] = self.context_totals.get(ctx, 0) + 1

    def logprob(self, context: Sequence[str], token: str) -> float:
        ctx = tuple(context)
        count = self.counts.get(ctx, {}).get(token, 0)
        total = self.context_totals.get(ctx, 0)
        return math.log((count + self.k) / (total + self.k * len(self.vocab)))

    def _context(self, prompt: Sequence[str], decoded: Sequence[str]) -> tuple[str, ...]:
        sp = self.tokenizer.specials
        mention = _mention_tokens_from_prompt(prompt, self.tokenizer)
        seq = [sp.bos] * (self.order - 1) + mention + [sp.sep] + list(decoded)
        return tuple(seq[len(seq) - self.order + 1:]) if self.order > 1 else ()

    def score_next(self, source, prompt, decoded, allowed):
        ctx = self._context(prompt, decoded)
        return [self.logprob(ctx, token) for token in allowed]


def _mention_tokens_from_prompt(prompt: Sequence[str], tokenizer: Tokenizer) -> list[str]:
    """Strip the trailing " is" from a tokenized "<mention> is" prompt."""
    prompt = list(prompt)
    if not prompt:
        return []
    if tokenizer.kind == "whitespace":
        return prompt[:-1] if prompt[-1] == "is" else prompt
    if prompt[-3:] == [" ", "i", "s"]:
        return prompt[:-3]
    return prompt


def train_ngram(pairs: Sequence, tokenizer: Tokenizer, order: int = 4, k: float = 0.1) -> NgramScorer:
    """Fit an NgramScorer on prepared TrainPairs; mentions come from the source markers."""
    if not pairs:
        raise ValueError("cannot train on an empty pair list")
    scorer = NgramScorer(order=order, k=k, tokenizer=tokenizer)
    for pair in pairs:
        mention = extract_mention(pair.source,
                                  tokenizer.specials.start, tokenizer.specials.end)
        scorer.observe(mention, pair.target_name)
    return scorer


def _write_str(fh, s: str) -> None:
    data = s.encode("utf-8")
    fh.write(struct.pack("<I", len(data)))
    fh.write(data)


def _read_str(fh) -> str:
    (n,) = struct.unpack("<I", fh.read(4))
    return fh.read(n).decode("utf-8")


def save_ngram(scorer: NgramScorer, path: str | Path) -> None:
    """Binary model dump: magic, version, tokenizer kind, order, k, vocab, counts."""
    vocab = sorted(scorer.vocab)
    ids = {tok: i for i, tok in enumerate(vocab)}
    with open(path, "wb") as fh:
        fh.write(NGRAM_MAGIC)
        fh.write(struct.pack("<IBId", NGRAM_FORMAT_VERSION,
                             TOKENIZER_KINDS.index(scorer.tokenizer.kind), scorer.order, scorer.k))
        fh.write(struct.pack("<I", len(vocab)))
        for tok in vocab:
            _write_str(fh, tok)
        fh.write(struct.pack("<Q", len(scorer.counts)))
        for ctx in sorted(scorer.counts):
            bucket = scorer.counts[ctx]
            fh.write(struct.pack("<I", len(ctx)))
            for tok in ctx:
                fh.write(struct.pack("<I", ids[tok]))
            fh.write(struct.pack("<I", len(bucket)))
            for tok in sorted(bucket):
                fh.write(struct.pack("<IQ", ids[tok], bucket[tok]))


def load_ngram(path: str | Path) -> NgramScorer:
    with open(path, "rb") as fh:
        if fh.read(4) != NGRAM_MAGIC:
            raise IntegrityError(f"{path}: not an n-gram model file")
        version, kind_id, order, k = struct.unpack("<IBId", fh.read(17))
        if version != NGRAM_FORMAT_VERSION:
            raise IntegrityError(f"{path}: unsupported model version {version}")
        scorer = NgramScorer(order=order, k=k, tokenizer=Tokenizer(TOKENIZER_KINDS[kind_id]))
        (n_vocab,) = struct.unpack("<I", fh.read(4))
        vocab = [_read_str(fh) for _ in range(n_vocab)]
        scorer.vocab = set(vocab)
        (n_ctx,) = struct.unpack("<Q", fh.read(8))
        for _ in range(n_ctx):
            (ctx_len,) = struct.unpack("<I", fh.read(4))
            ctx = tuple(vocab[struct.unpack("<I", fh.read(4))[0]] for _ in range(ctx_len))
            (n_entries,) = struct.unpack("<I", fh.read(4))
            bucket: Counter[str] = Counter()
            for _ in range(n_entries):
                tok_id, count = struct.unpack("<IQ", fh.read(12))
                bucket[vocab[tok_id]] = count
            scorer.counts[ctx] = bucket
            scorer.context_totals[ctx] = sum(bucket.values())
        return scorer


class ExternalScorer:
    """Bridge client: scores via a subprocess speaking JSON lines on stdio.

    One request in flight per session; a lock serializes concurrent callers.
    Request ids increase strictly and responses must echo them back.
    """

    def __init__(self, command: str | Sequence[str], tokenizer: Tokenizer):
        self._argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.tokenizer = tokenizer
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()
        self._next_id = 0

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self._argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, encoding="utf-8", bufsize=1,
            )
        return self._proc

    def score_next(self, source, prompt, decoded, allowed):
        with self._lock:
            proc = self._ensure_started()
            request = {
                "id": self._next_id,
                "source": self.tokenizer.detokenize(source),
                "prompt": self.tokenizer.detokenize(prompt),
                "prefix": list(decoded),
                "allowed": list(allowed),
            }
            self._next_id += 1
            proc.stdin.write(json.dumps(request, ensure_ascii=False,
                                        separators=(",", ":")) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
            if not line:
                raise DecodeError("bridge process closed its output stream")
            response = json.loads(line)
            if "error" in response:
                raise DecodeError(f"bridge error for request {response.get('id')}: {response['error']}")
            if response.get("id") != request["id"]:
                raise DecodeError(f"bridge answered request {response.get('id')}, expected {request['id']}")
            logprobs = response.get("logprobs")
            if not isinstance(logprobs, list) or len(logprobs) != len(allowed):
                raise DecodeError("bridge returned a logprobs list of the wrong length")
            return [float(x) for x in logprobs]

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()
        self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
