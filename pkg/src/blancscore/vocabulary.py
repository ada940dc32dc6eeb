"""Vocabulary table with the special ids the scoring pipeline relies on."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ModelLoadError


@dataclass
class Vocabulary:
    """id <-> surface table plus special token ids and tokenizer flags.

    ``filler_id`` is the id of the period token used to build base-input
    prefixes. ``sequence_start_id``/``sequence_end_id`` frame every model
    input ([CLS]/[SEP] in BERT terms).
    """

    surfaces: list[str]
    mask_id: int
    unknown_id: int
    filler_id: int
    padding_id: int
    sequence_start_id: int
    sequence_end_id: int
    max_len: int
    lowercase: bool
    _table: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._table = {s: i for i, s in enumerate(self.surfaces)}
        specials = {
            "mask": self.mask_id,
            "unknown": self.unknown_id,
            "filler": self.filler_id,
            "padding": self.padding_id,
            "sequence_start": self.sequence_start_id,
            "sequence_end": self.sequence_end_id,
        }
        for name, sid in specials.items():
            if not 0 <= sid < len(self.surfaces):
                raise ModelLoadError("vocabulary", f"special id {name}={sid} outside table")
        if len({self.mask_id, self.unknown_id, self.filler_id}) != 3:
            raise ModelLoadError("vocabulary", "mask/unknown/filler ids must be distinct")
        if self.max_len < 4:
            raise ModelLoadError("tokenizer-config", f"max_len {self.max_len} too small")

    def __len__(self) -> int:
        return len(self.surfaces)

    def contains(self, surface: str) -> bool:
        return surface in self._table

    def id_of(self, surface: str) -> int:
        return self._table[surface]

    def surface_of(self, vocab_id: int) -> str:
        return self.surfaces[vocab_id]

    @property
    def special_budget(self) -> int:
        """Number of framing tokens added around every model input."""
        return 2
