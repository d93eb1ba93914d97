"""Deterministic text utilities.

Tokenization, suffix-stripping stems, lexicon-based POS tagging, an
interpolated add-k n-gram language model for fluency scoring, and mention
matching of rationales against grounding annotations. Everything here is a
pure function of immutable inputs, so concurrent use is unrestricted.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .model import GroundingAnnotation, MentionReport

SENT_END = "<eos>"
BOS = "<bos>"
UNK = "<unk>"

_TOKEN_RE = re.compile(r"<eos>|[A-Za-z0-9']+|[.!?]+")


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; sentence terminators become SENT_END markers."""
    tokens: list[str] = []
    for match in _TOKEN_RE.finditer(text):
        tok = match.group()
        if tok == SENT_END or tok[0] in ".!?":
            tokens.append(SENT_END)
        else:
            tokens.append(tok.lower())
    return tokens


def content_tokens(text: str) -> list[str]:
    return [t for t in tokenize(text) if t != SENT_END]


def sentences(text: str) -> list[list[str]]:
    """Token lists per sentence; a trailing unterminated sentence counts."""
    out: list[list[str]] = []
    current: list[str] = []
    for tok in tokenize(text):
        if tok == SENT_END:
            if current:
                out.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        out.append(current)
    return out


def stem_variants(token: str) -> frozenset[str]:
    """Candidate base forms under simple suffix stripping (s/es/ed/ing)."""
    variants = {token}
    for suffix in ("ing", "ed", "es", "s"):
        if token.endswith(suffix) and len(token) - len(suffix) >= 2:
            base = token[: -len(suffix)]
            variants.add(base)
            if suffix in ("ing", "ed"):
                variants.add(base + "e")  # making -> make
                if len(base) >= 3 and base[-1] == base[-2]:
                    variants.add(base[:-1])  # running -> run
    return frozenset(variants)


# --- POS lexicon -----------------------------------------------------------

DEFAULT_SUFFIX_RULES: tuple[tuple[str, str], ...] = (
    ("tion", "noun"),
    ("ment", "noun"),
    ("ness", "noun"),
    ("ity", "noun"),
    ("ize", "verb"),
    ("ise", "verb"),
    ("ify", "verb"),
)


@dataclass(frozen=True)
class PosLexicon:
    """Coarse word-class lexicon with ordered suffix fallbacks."""

    noun_terms: frozenset[str]
    verb_terms: frozenset[str]
    conjunction_terms: frozenset[str]
    suffix_rules: tuple[tuple[str, str], ...] = DEFAULT_SUFFIX_RULES

    def __post_init__(self) -> None:
        pairs = (
            (self.noun_terms, self.verb_terms),
            (self.noun_terms, self.conjunction_terms),
            (self.verb_terms, self.conjunction_terms),
        )
        for a, b in pairs:
            overlap = a & b
            if overlap:
                raise ValueError(f"POS lexicon categories overlap: {sorted(overlap)}")


def read_term_file(path_or_text: str | Path, *, is_text: bool = False) -> list[str]:
    """Plain-text term list: one term per line, '#' comments, blanks skipped."""
    text = path_or_text if is_text else Path(path_or_text).read_text(encoding="utf-8")
    terms = []
    for line in str(text).splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            terms.append(line)
    return terms


def _data_text(name: str) -> str:
    return resources.files("cotforge.data").joinpath(name).read_text(encoding="utf-8")


def load_default_lexicon() -> PosLexicon:
    return PosLexicon(
        noun_terms=frozenset(read_term_file(_data_text("nouns.txt"), is_text=True)),
        verb_terms=frozenset(read_term_file(_data_text("verbs.txt"), is_text=True)),
        conjunction_terms=frozenset(
            read_term_file(_data_text("conjunctions.txt"), is_text=True)
        ),
    )


def load_default_noun_allowlist() -> frozenset[str]:
    return frozenset(read_term_file(_data_text("noun_allowlist.txt"), is_text=True))


def load_default_verb_allowlist() -> frozenset[str]:
    return frozenset(read_term_file(_data_text("verb_allowlist.txt"), is_text=True))


def tag_pos(token: str, lexicon: PosLexicon) -> str:
    """Category of a normalized token: noun, verb, conjunction or other."""
    if token in lexicon.conjunction_terms:
        return "conjunction"
    if token in lexicon.noun_terms:
        return "noun"
    if token in lexicon.verb_terms:
        return "verb"
    stems = stem_variants(token)
    if stems & lexicon.noun_terms:
        return "noun"
    if stems & lexicon.verb_terms:
        return "verb"
    for suffix, category in lexicon.suffix_rules:
        if token.endswith(suffix) and len(token) > len(suffix):
            return category
    return "other"


# --- n-gram language model -------------------------------------------------


@dataclass(frozen=True)
class NGramModel:
    """Interpolated add-k n-gram model over tokenized text.

    ``vocabulary`` always contains the UNK slot; unseen query tokens map to
    it, so every conditional probability is strictly positive and at most 1.
    """

    order: int
    vocabulary: frozenset[str]
    counts: dict[int, dict[tuple[str, ...], int]]
    context_totals: dict[int, dict[tuple[str, ...], int]]
    smoothing_k: float = 0.01
    interpolation_weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.smoothing_k <= 0:
            raise ValueError("smoothing_k must be positive")
        if UNK not in self.vocabulary:
            raise ValueError("vocabulary must contain the UNK slot")
        weights = self.interpolation_weights or tuple(
            1.0 / self.order for _ in range(self.order)
        )
        object.__setattr__(self, "interpolation_weights", weights)
        if len(weights) != self.order:
            raise ValueError("interpolation_weights length must equal order")
        if any(w <= 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("interpolation_weights must be positive and sum to 1")

    def _fold(self, token: str) -> str:
        if token == BOS or token in self.vocabulary:
            return token
        return UNK

    def prob(self, token: str, context: Sequence[str]) -> float:
        """Interpolated add-k probability of token given preceding tokens."""
        token = self._fold(token)
        context = [self._fold(t) for t in context]
        vocab_size = len(self.vocabulary)
        k = self.smoothing_k
        padded = [BOS] * (self.order - 1) + list(context)
        p = 0.0
        for n, weight in zip(range(1, self.order + 1), self.interpolation_weights):
            ctx = tuple(padded[len(padded) - (n - 1) :]) if n > 1 else ()
            c_ngram = self.counts.get(n, {}).get(ctx + (token,), 0)
            c_ctx = self.context_totals.get(n, {}).get(ctx, 0)
            p += weight * (c_ngram + k) / (c_ctx + k * vocab_size)
        return p

    def to_dict(self) -> dict:
        return {
            "format": "cotforge-ngram",
            "version": 1,
            "order": self.order,
            "vocabulary": sorted(self.vocabulary),
            "counts": {
                str(n): {" ".join(gram): c for gram, c in sorted(table.items())}
                for n, table in self.counts.items()
            },
            "smoothing_k": self.smoothing_k,
            "interpolation_weights": list(self.interpolation_weights),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "NGramModel":
        if d.get("format") != "cotforge-ngram" or d.get("version") != 1:
            raise ValueError("unrecognized model container")
        counts = {
            int(n): {tuple(gram.split(" ")): c for gram, c in table.items()}
            for n, table in d["counts"].items()
        }
        return cls(
            order=d["order"],
            vocabulary=frozenset(d["vocabulary"]),
            counts=counts,
            context_totals=_context_totals(counts),
            smoothing_k=d["smoothing_k"],
            interpolation_weights=tuple(d["interpolation_weights"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def uniform(cls, types: Iterable[str], *, count: int = 1, smoothing_k: float = 2.0) -> "NGramModel":
        """Unigram model assigning equal probability to every type (UNK included)."""
        vocab = frozenset(types) | {UNK}
        counts = {1: {(t,): count for t in sorted(vocab)}}
        return cls(
            order=1,
            vocabulary=vocab,
            counts=counts,
            context_totals=_context_totals(counts),
            smoothing_k=smoothing_k,
        )


def _context_totals(counts: dict[int, dict[tuple[str, ...], int]]) -> dict[int, dict[tuple[str, ...], int]]:
    totals: dict[int, dict[tuple[str, ...], int]] = {}
    for n, table in counts.items():
        agg: dict[tuple[str, ...], int] = {}
        for gram, c in table.items():
            ctx = gram[:-1]
            agg[ctx] = agg.get(ctx, 0) + c
        totals[n] = agg
    return totals


def train_lm(
    corpus: Sequence[str],
    order: int = 3,
    smoothing_k: float = 0.01,
    interpolation_weights: Optional[Sequence[float]] = None,
) -> NGramModel:
    """Count-based training over the tokenized corpus with BOS/EOS padding."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    if smoothing_k <= 0:
        raise ValueError("smoothing_k must be positive")
    counts: dict[int, dict[tuple[str, ...], int]] = {n: {} for n in range(1, order + 1)}
    vocab: set[str] = {UNK}
    for text in corpus:
        tokens = tokenize(text)
        if not tokens:
            continue
        if tokens[-1] != SENT_END:
            tokens.append(SENT_END)
        vocab.update(tokens)
        padded = [BOS] * (order - 1) + tokens
        start = order - 1
        for i in range(start, len(padded)):
            for n in range(1, order + 1):
                gram = tuple(padded[i - n + 1 : i + 1])
                table = counts[n]
                table[gram] = table.get(gram, 0) + 1
    return NGramModel(
        order=order,
        vocabulary=frozenset(vocab),
        counts=counts,
        context_totals=_context_totals(counts),
        smoothing_k=smoothing_k,
        interpolation_weights=tuple(interpolation_weights or ()),
    )


def mean_log_prob(model: NGramModel, text: str) -> float:
    """Average log conditional probability over the text's tokens."""
    tokens = tokenize(text)
    if not tokens:
        raise ValueError("text tokenizes to zero tokens")
    logs = []
    for i, tok in enumerate(tokens):
        context = tokens[max(0, i - (model.order - 1)) : i]
        logs.append(math.log(model.prob(tok, context)))
    return math.fsum(logs) / len(logs)


def perplexity(model: NGramModel, text: str) -> float:
    """exp of per-token negative average log-likelihood; always >= 1."""
    return math.exp(-mean_log_prob(model, text))


def load_seed_model(order: int = 3, smoothing_k: float = 0.01) -> NGramModel:
    """Trigram model trained on the shipped seed rationale corpus."""
    lines = [
        line
        for line in _data_text("seed_corpus.txt").splitlines()
        if line.strip() and not line.startswith("#")
    ]
    return train_lm(lines, order=order, smoothing_k=smoothing_k)


# --- mention matching ------------------------------------------------------


def _subsequence_at(tokens: list[str], term_tokens: list[str], fold: bool) -> bool:
    if not term_tokens:
        return False
    n = len(term_tokens)
    if fold:
        folded = [stem_variants(t) for t in tokens]
        needles = [stem_variants(t) for t in term_tokens]
        for i in range(len(tokens) - n + 1):
            if all(folded[i + j] & needles[j] for j in range(n)):
                return True
        return False
    for i in range(len(tokens) - n + 1):
        if tokens[i : i + n] == term_tokens:
            return True
    return False


def _term_matches(tokens: list[str], term: str, synonyms: Sequence[str], fold: bool) -> bool:
    for surface in (term, *synonyms):
        if _subsequence_at(tokens, content_tokens(surface), fold):
            return True
    return False


def _closure_stems(entries) -> frozenset[str]:
    stems: set[str] = set()
    for entry in entries:
        for surface in (entry.term, *entry.synonyms):
            for tok in content_tokens(surface):
                stems.update(stem_variants(tok))
    return frozenset(stems)


def match_mentions(
    text: str,
    grounding: GroundingAnnotation,
    pos_lexicon: PosLexicon,
    *,
    noun_allowlist: Optional[frozenset[str]] = None,
    verb_allowlist: Optional[frozenset[str]] = None,
) -> MentionReport:
    """Coverage and hallucination report for a rationale against grounding.

    Objects match on exact token subsequences of the canonical term or any
    synonym; actions additionally fold verb inflections. Hallucinated
    mentions are lexicon-tagged nouns/verbs outside the grounding's synonym
    closure and outside the abstract-term allowlists.
    """
    if noun_allowlist is None:
        noun_allowlist = load_default_noun_allowlist()
    if verb_allowlist is None:
        verb_allowlist = load_default_verb_allowlist()

    tokens = content_tokens(text)
    pos_objects = tuple(
        e.term for e in grounding.objects if _term_matches(tokens, e.term, e.synonyms, fold=False)
    )
    pos_actions = tuple(
        e.term for e in grounding.actions if _term_matches(tokens, e.term, e.synonyms, fold=True)
    )

    object_closure = _closure_stems(grounding.objects)
    action_closure = _closure_stems(grounding.actions)

    neg_objects: list[str] = []
    neg_actions: list[str] = []
    for tok in tokens:
        category = tag_pos(tok, pos_lexicon)
        if category == "noun":
            if tok in noun_allowlist or stem_variants(tok) & object_closure:
                continue
            if tok not in neg_objects:
                neg_objects.append(tok)
        elif category == "verb":
            if tok in verb_allowlist or stem_variants(tok) & action_closure:
                continue
            if tok not in neg_actions:
                neg_actions.append(tok)

    return MentionReport(
        pos_objects=pos_objects,
        neg_objects=tuple(neg_objects),
        pos_actions=pos_actions,
        neg_actions=tuple(neg_actions),
    )
