"""
Derivative lists and their evaluation.

A list is a word X^1 ... X^k over frame letters (a frame slot and a
conjugation flag). Its value on a defining function rho is the iterated
derivative X^1 ... X^{k-2} applied to the pairing of d rho with the bracket
[X^{k-1}, X^k]. `list_apply` builds that value symbolically; `word_tensors`
evaluates every word of a given length at once by pushing Taylor jets
through the letters level by level.
"""

from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import WeightError
from .expr import JetArgs, SmoothExpr
from .fields import Field, apply_field, bracket, pair_drho
from .jets import get_space

Letter = Tuple[int, bool]


@dataclass(frozen=True)
class ListSpec:
    """A word of frame letters; each letter is (slot, conjugated)."""

    word: Tuple[Letter, ...]

    def __len__(self) -> int:
        return len(self.word)

    def counts(self, slot: int) -> Tuple[int, int, int]:
        """(l_i, l_i^1, l_i^2): occurrences of the slot, unconjugated, conjugated."""
        plain = sum(1 for s, c in self.word if s == slot and not c)
        conj = sum(1 for s, c in self.word if s == slot and c)
        return plain + conj, plain, conj

    @property
    def slots(self) -> Tuple[int, ...]:
        return tuple(sorted({s for s, _ in self.word}))

    @property
    def counters(self) -> Dict[int, Tuple[int, int, int]]:
        return {s: self.counts(s) for s in self.slots}

    def conjugated(self) -> "ListSpec":
        return ListSpec(tuple((s, not c) for s, c in self.word))

    def label(self, names: Optional[Sequence[str]] = None) -> str:
        parts = []
        for slot, conj in self.word:
            name = names[slot] if names else f"L{slot + 1}"
            parts.append(f"conj({name})" if conj else name)
        return "(" + ", ".join(parts) + ")"

    def __str__(self) -> str:
        return self.label()


def alphabet(nslots: int) -> List[Letter]:
    """Letters in tensor order: L_1..L_m then conj(L_1)..conj(L_m)."""
    return [(s, False) for s in range(nslots)] + [(s, True) for s in range(nslots)]


def enumerate_lists(nslots: int, max_length: int, min_length: int = 2) -> Iterator[ListSpec]:
    """All words of length min_length..max_length; (2 nslots)^k of each length k."""
    letters = alphabet(nslots)
    for k in range(min_length, max_length + 1):
        for word in product(letters, repeat=k):
            yield ListSpec(tuple(word))


def _resolve(frame: Union[Sequence[Field], object]) -> Sequence[Field]:
    fields = getattr(frame, "fields", frame)
    return list(fields)  # type: ignore[call-overload]


def letter_field(fields: Sequence[Field], letter: Letter) -> Field:
    slot, conj = letter
    field = fields[slot]
    return field.conjugate() if conj else field


def list_apply(spec: ListSpec, frame: Union[Sequence[Field], object], rho: SmoothExpr) -> SmoothExpr:
    """
    Symbolic value X^1 ... X^{k-2} <d rho, [X^{k-1}, X^k]> of a list.

    Args:
        spec: The list; slots index the frame's fields (tangent fields then normal)
        frame: A Frame or a sequence of fields
        rho: Defining function

    Returns:
        The list value as a smooth expression

    Raises:
        WeightError: If the list is shorter than 2
    """
    if len(spec) < 2:
        raise WeightError(f"Lists have length at least 2, got {len(spec)}")
    fields = _resolve(frame)
    x_last = letter_field(fields, spec.word[-2])
    y_last = letter_field(fields, spec.word[-1])
    value = pair_drho(bracket(x_last, y_last), rho)
    for letter in reversed(spec.word[:-2]):
        value = apply_field(letter_field(fields, letter), value)
    return value


def pairing_targets(letters: Sequence[Field], rho: SmoothExpr) -> List[SmoothExpr]:
    """<d rho, [X_a, X_b]> for every ordered pair of letters, row-major in (a, b)."""
    nl = len(letters)
    table: Dict[Tuple[int, int], SmoothExpr] = {}
    for a in range(nl):
        for b in range(nl):
            if (b, a) in table:
                table[(a, b)] = -table[(b, a)]
            elif a == b:
                table[(a, b)] = pair_drho(Field.zero_field(rho.n), rho)
            else:
                table[(a, b)] = pair_drho(bracket(letters[a], letters[b]), rho)
    return [table[(a, b)] for a in range(nl) for b in range(nl)]


def word_tensors(
    letters: Sequence[Field],
    targets: np.ndarray,
    args: JetArgs,
    depth: int,
) -> List[np.ndarray]:
    """
    Apply every word of up to `depth` letters to a stack of target jets.

    Args:
        letters: Fields acting as letters
        targets: Jet coefficients of shape (T, *batch, dim) in args.space
        args: Coordinate jets at the evaluation points
        depth: Longest word to apply (at most the jet order)

    Returns:
        One array per word length l = 0..depth, of shape (nl,)*l + (T, *batch):
        the value of X^{i_1}(...X^{i_l}(target)) at the base points
    """
    space = args.space
    if depth > space.order:
        raise ValueError(f"Depth {depth} exceeds jet order {space.order}")
    nl = len(letters)
    coeffs = [letter.coefficient_jets(args) for letter in letters]
    tail = targets.shape[:-1]
    current = targets
    levels = [current[..., 0]]
    for level in range(1, depth + 1):
        upper = get_space(space.nvar, space.order - level + 1)
        lower = get_space(space.nvar, space.order - level)
        blocks = []
        for x in range(nl):
            acc = np.zeros(current.shape[:-1] + (lower.dim,), dtype=complex)
            for slot, jet in coeffs[x]:
                derivative = upper.differentiate(current, slot)
                acc += lower.multiply(jet.coeffs[..., : lower.dim], derivative)
            blocks.append(acc)
        current = np.concatenate(blocks, axis=0)
        levels.append(current[..., 0])
    return [lv.reshape((nl,) * l + tail) for l, lv in enumerate(levels)]


def list_tensors(
    letters: Sequence[Field],
    rho: SmoothExpr,
    points: np.ndarray,
    max_length: int,
) -> Dict[int, np.ndarray]:
    """
    Values of every list of length 2..max_length over the given letters.

    Returns:
        Mapping k -> array of shape (nl,)*k + batch, indexed by the word's letters
    """
    if max_length < 2:
        raise WeightError(f"Lists have length at least 2, got bound {max_length}")
    pts = np.asarray(points, dtype=complex)
    batch = pts.shape[:-1]
    nl = len(letters)
    space = get_space(rho.n, max_length - 2)
    args = JetArgs.at_points(space, pts)
    targets = np.stack([t.jet(args).coeffs for t in pairing_targets(letters, rho)])
    levels = word_tensors(letters, targets, args, max_length - 2)
    out: Dict[int, np.ndarray] = {}
    for k in range(2, max_length + 1):
        out[k] = levels[k - 2].reshape((nl,) * k + batch)
    return out
