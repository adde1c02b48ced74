"""Tic-tac-toe positions labeled with a preferred move and the reason for it.

Cells are numbered row-major::

    0 | 1 | 2
    3 | 4 | 5
    6 | 7 | 8

The labeler applies four rules in order (Win, Block, Threat, Empty). The rules
do not guarantee optimal play and no search corrects them.
"""

from __future__ import annotations

import itertools
from collections import Counter
from enum import StrEnum

import numpy as np
import structlog
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from tedkit.datasets.base import Dataset
from tedkit.errors import BoardError

logger = structlog.get_logger(__name__)

LINES: tuple[tuple[int, int, int], ...] = (
    (0, 1, 2),
    (3, 4, 5),
    (6, 7, 8),
    (0, 3, 6),
    (1, 4, 7),
    (2, 5, 8),
    (0, 4, 8),
    (2, 4, 6),
)

N_POSITIONS = 4520
FEATURE_NAMES: tuple[str, ...] = tuple(f"f{i}" for i in range(19))
MOVE_NAMES: tuple[str, ...] = tuple(str(i) for i in range(9))


class Player(StrEnum):
    X = "X"
    O = "O"  # noqa: E741

    @property
    def opponent(self) -> Player:
        return Player.O if self is Player.X else Player.X


class SquareKind(StrEnum):
    CENTER = "center"
    CORNER = "corner"
    MIDDLE = "middle"


class Reason(StrEnum):
    WIN = "Win"
    BLOCK = "Block"
    THREAT = "Threat"
    EMPTY = "Empty"


REASON_NAMES: tuple[str, ...] = tuple(reason.value for reason in Reason)
_REASON_IDS = {reason: i for i, reason in enumerate(Reason)}

# Rule 4 preference: center, then corners, then middles; lowest index within a kind.
_PREFERENCE: tuple[int, ...] = (4, 0, 2, 6, 8, 1, 3, 5, 7)


class Square(BaseModel):
    """A board cell; its kind follows from the index."""

    model_config = ConfigDict(frozen=True)

    index: int = Field(..., ge=0, le=8)

    @property
    def kind(self) -> SquareKind:
        if self.index == 4:
            return SquareKind.CENTER
        if self.index in (0, 2, 6, 8):
            return SquareKind.CORNER
        return SquareKind.MIDDLE


class MoveLabel(BaseModel):
    """Preferred move and the rule that chose it."""

    model_config = ConfigDict(frozen=True)

    square: Square
    reason: Reason


class Board(BaseModel):
    """Occupancy planes for X and O plus the side to move.

    Construction only checks shape and disjointness; legality is checked by
    :meth:`is_legal_nonterminal` / :meth:`require_legal_nonterminal`.
    """

    model_config = ConfigDict(frozen=True)

    x_plane: tuple[int, ...]
    o_plane: tuple[int, ...]
    side_to_move: Player

    @field_validator("x_plane", "o_plane")
    @classmethod
    def _nine_bits(cls, plane: tuple[int, ...]) -> tuple[int, ...]:
        if len(plane) != 9 or any(bit not in (0, 1) for bit in plane):
            raise ValueError("a plane is 9 cells of 0/1")
        return plane

    @model_validator(mode="after")
    def _disjoint(self) -> Board:
        if any(x and o for x, o in zip(self.x_plane, self.o_plane, strict=True)):
            raise ValueError("a cell cannot hold both X and O")
        return self

    @classmethod
    def from_cells(cls, cells: tuple[int, ...] | list[int], side_to_move: Player) -> Board:
        """Build from 9 cell states (0 empty, 1 X, 2 O)."""
        return cls(
            x_plane=tuple(int(c == 1) for c in cells),
            o_plane=tuple(int(c == 2) for c in cells),
            side_to_move=side_to_move,
        )

    @classmethod
    def from_string(cls, text: str, side_to_move: Player | str | None = None) -> Board:
        """Parse ``"XO.......``-style text (row-major, ``.`` or ``-`` for empty).

        The side to move defaults to the one implied by the piece counts.
        """
        cells = [c for c in text if not c.isspace() and c != "|"]
        if len(cells) != 9 or any(c not in "XOxo.-_" for c in cells):
            raise BoardError(f"cannot parse board {text!r}")
        codes = [1 if c in "Xx" else 2 if c in "Oo" else 0 for c in cells]
        if side_to_move is None:
            side_to_move = Player.X if codes.count(1) == codes.count(2) else Player.O
        return cls.from_cells(codes, Player(side_to_move))

    @property
    def empty_squares(self) -> list[int]:
        return [i for i in range(9) if not self.x_plane[i] and not self.o_plane[i]]

    def plane(self, player: Player) -> tuple[int, ...]:
        return self.x_plane if player is Player.X else self.o_plane

    def completed_line(self, player: Player) -> bool:
        plane = self.plane(player)
        return any(all(plane[i] for i in line) for line in LINES)

    def is_legal_nonterminal(self) -> bool:
        n_x, n_o = sum(self.x_plane), sum(self.o_plane)
        if self.side_to_move is Player.X and n_x != n_o:
            return False
        if self.side_to_move is Player.O and n_x != n_o + 1:
            return False
        if self.completed_line(Player.X) or self.completed_line(Player.O):
            return False
        return n_x + n_o < 9

    def require_legal_nonterminal(self) -> None:
        if not self.is_legal_nonterminal():
            raise BoardError(f"board {self.render()!r} is illegal or terminal")

    def render(self) -> str:
        return "".join(
            "X" if x else "O" if o else "." for x, o in zip(self.x_plane, self.o_plane, strict=True)
        )


def winning_squares(board: Board, player: Player) -> list[int]:
    """Empty squares that complete a line for *player*, ascending."""
    own, other = board.plane(player), board.plane(player.opponent)
    found: set[int] = set()
    for line in LINES:
        if sum(own[i] for i in line) == 2 and not any(other[i] for i in line):
            found.update(i for i in line if not own[i])
    return sorted(found)


def threat_squares(board: Board, player: Player) -> list[int]:
    """Empty squares that give *player* two in a line whose third cell is empty."""
    own, other = board.plane(player), board.plane(player.opponent)
    found: set[int] = set()
    for line in LINES:
        if sum(own[i] for i in line) == 1 and not any(other[i] for i in line):
            found.update(i for i in line if not own[i])
    return sorted(found)


def enumerate_legal_nonterminal() -> list[Board]:
    """Every legal non-terminal position, in lexicographic order of cell states.

    Cell states are ordered empty < X < O; the side to move is implied by the
    piece counts, so each grid yields at most one board.
    """
    boards: list[Board] = []
    for cells in itertools.product((0, 1, 2), repeat=9):
        n_x, n_o = cells.count(1), cells.count(2)
        if n_x == n_o:
            side = Player.X
        elif n_x == n_o + 1:
            side = Player.O
        else:
            continue
        board = Board.from_cells(cells, side)
        if board.is_legal_nonterminal():
            boards.append(board)
    logger.debug("tictactoe.enumerated", positions=len(boards))
    return boards


def label_move(board: Board) -> MoveLabel:
    """Preferred move for the side to move, by the first rule that applies.

    1. Win: complete a line.
    2. Block: take a square the opponent would complete a line on.
    3. Threat: make two in a line whose third square is empty.
    4. Empty: center, then corners, then middles.

    Ties inside rules 1-3 go to the lowest square index.

    Raises:
        BoardError: If the board is illegal or terminal.
    """
    board.require_legal_nonterminal()
    mover = board.side_to_move
    for reason, candidates in (
        (Reason.WIN, winning_squares(board, mover)),
        (Reason.BLOCK, winning_squares(board, mover.opponent)),
        (Reason.THREAT, threat_squares(board, mover)),
    ):
        if candidates:
            return MoveLabel(square=Square(index=candidates[0]), reason=reason)
    empty = set(board.empty_squares)
    square = next(i for i in _PREFERENCE if i in empty)
    return MoveLabel(square=Square(index=square), reason=Reason.EMPTY)


def featurize(board: Board) -> np.ndarray:
    """19 binary features: X plane, O plane, then 1 if X is to move."""
    vector = np.zeros(19, dtype=np.int8)
    vector[0:9] = board.x_plane
    vector[9:18] = board.o_plane
    vector[18] = 1 if board.side_to_move is Player.X else 0
    return vector


def board_from_features(features: np.ndarray | list[float]) -> Board:
    """Inverse of :func:`featurize`."""
    values = [int(round(v)) for v in np.asarray(features, dtype=np.float64).tolist()]
    if len(values) != 19:
        raise BoardError(f"expected 19 features, got {len(values)}")
    try:
        return Board(
            x_plane=tuple(values[0:9]),
            o_plane=tuple(values[9:18]),
            side_to_move=Player.X if values[18] else Player.O,
        )
    except ValidationError as exc:
        raise BoardError(f"features do not describe a board: {exc.errors()[0]['msg']}") from exc


def build_dataset(with_explanations: bool) -> Dataset:
    """All 4,520 positions with their preferred move, and optionally its reason."""
    boards = enumerate_legal_nonterminal()
    labels = [label_move(board) for board in boards]
    dataset = Dataset(
        features=np.stack([featurize(board) for board in boards]),
        labels=np.array([label.square.index for label in labels]),
        label_names=MOVE_NAMES,
        feature_names=FEATURE_NAMES,
        explanations=(
            np.array([_REASON_IDS[label.reason] for label in labels])
            if with_explanations
            else None
        ),
        explanation_names=REASON_NAMES,
        kind="tictactoe",
    )
    logger.info(
        "tictactoe.dataset_built",
        instances=len(dataset),
        with_explanations=with_explanations,
        moves=len(set(dataset.labels.tolist())),
    )
    return dataset


def label_board_counts(dataset: Dataset) -> dict[str, int]:
    """Frequency of each ``move/reason`` pair (or each move for baseline data)."""
    if dataset.explanations is None:
        keys = [dataset.label_names[y] for y in dataset.labels.tolist()]
    else:
        keys = [
            f"{dataset.label_names[y]}/{dataset.explanation_names[e]}"
            for y, e in zip(dataset.labels.tolist(), dataset.explanations.tolist(), strict=True)
        ]
    return dict(sorted(Counter(keys).items()))


def describe_move(move: str, reason: str | None = None) -> str:
    """Display form used by ``predict``: ``move 4 — Empty``."""
    return f"move {move}" if reason is None else f"move {move} — {reason}"
