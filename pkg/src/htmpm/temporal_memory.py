"""Temporal memory: per-cell sequence learning over active columns.

Cells are addressed flat as ``column * m_cells + i``. Distal segments live
in flat numpy arrays (one row per segment, fixed synapse width, padded with
a sentinel cell id) so the per-record predict and learning passes are
vectorized. A cell becomes predictive when at least one of its segments
has strictly more than ``activation_threshold`` established synapses onto
currently active cells (permanence below the connect threshold counts as
zero). Active columns with no predicted cell burst: every cell in the
column activates.

Learning is Hebbian with asymmetric rates: segments that correctly
predicted are reinforced (inc) and decayed (dec); segments that predicted
a column that never activated are punished at a strictly slower rate, so
forgetting is slower than updating.

The per-record cycle is fixed: activate from the previous step's
predictions, then learn, then compute the new predictions.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .spatial_pooler import ColumnActivation


class TemporalMemory:
    def __init__(
        self,
        n_columns: int = 2048,
        m_cells: int = 32,
        activation_threshold: int = 13,
        connect_threshold: float = 0.5,
        initial_permanence: float = 0.21,
        perm_inc: float = 0.1,
        perm_dec: float = 0.1,
        perm_punish: float = 0.01,
        sample_size: int = 20,
        max_segments_per_cell: int = 128,
        max_synapses_per_segment: int = 40,
    ):
        if n_columns <= 0 or m_cells <= 0:
            raise ValidationError("n_columns and m_cells must be positive")
        if activation_threshold < 0:
            raise ValidationError("activation_threshold must be >= 0")
        if min(perm_inc, perm_dec, perm_punish) < 0:
            raise ValidationError("learning rates must be non-negative")
        # forgetting must be strictly slower than updating (zero rates allowed
        # together, which disables learning entirely)
        if perm_punish >= perm_dec and not (perm_punish == 0 and perm_dec == 0):
            raise ValidationError(
                f"perm_punish ({perm_punish}) must be < perm_dec ({perm_dec})"
            )
        if sample_size <= 0 or max_synapses_per_segment < sample_size:
            raise ValidationError(
                "need 0 < sample_size <= max_synapses_per_segment"
            )
        self.n_columns = n_columns
        self.m_cells = m_cells
        self.n_cells = n_columns * m_cells
        self.activation_threshold = activation_threshold
        self.connect_threshold = connect_threshold
        self.initial_permanence = initial_permanence
        self.perm_inc = perm_inc
        self.perm_dec = perm_dec
        self.perm_punish = perm_punish
        self.sample_size = sample_size
        self.max_segments_per_cell = max_segments_per_cell
        self.max_synapses_per_segment = max_synapses_per_segment

        self._sentinel = self.n_cells  # padding presyn id, never active
        cap = 256
        self.seg_presyn = np.full((cap, max_synapses_per_segment),
                                  self._sentinel, dtype=np.int32)
        self.seg_perm = np.zeros((cap, max_synapses_per_segment), dtype=np.float32)
        self.seg_cell = np.full(cap, -1, dtype=np.int32)
        self.seg_last_used = np.zeros(cap, dtype=np.int64)
        self._n_rows = 0               # high-water mark of allocated rows
        self._free_rows: list[int] = []
        self.segments_by_cell: dict[int, list[int]] = {}
        self._n_segs_per_cell = np.zeros(self.n_cells, dtype=np.int32)

        self.active_cells: set[int] = set()
        self.winner_cells: set[int] = set()
        self.predictive_cells: set[int] = set()
        self._active_arr = np.zeros(self.n_cells + 1, dtype=bool)
        self._active_rows: np.ndarray = np.empty(0, dtype=np.int64)
        self._active_counts: np.ndarray = np.empty(0, dtype=np.int64)
        self._matching_counts: np.ndarray = np.empty(0, dtype=np.int64)
        self._step = 0

    # ------------------------------------------------------------------
    # stepping

    def step(self, cols: ColumnActivation, learn: bool = True) -> None:
        """Run one full activate -> learn -> predict cycle."""
        self._step += 1
        prev_active_arr = self._active_arr
        prev_winners = self.winner_cells
        prev_predictive = self.predictive_cells
        prev_active_rows = self._active_rows
        prev_active_counts = self._active_counts
        prev_matching_counts = self._matching_counts

        active, winners, bursting = self._activate(
            cols, prev_predictive, prev_active_counts, prev_matching_counts
        )
        if learn:
            self._learn(
                cols, active, winners, bursting,
                prev_active_arr, prev_winners,
                prev_active_rows, prev_matching_counts,
            )
        self.active_cells = active
        self.winner_cells = winners
        arr = np.zeros(self.n_cells + 1, dtype=bool)
        if active:
            arr[np.fromiter(active, dtype=np.int64, count=len(active))] = True
        self._active_arr = arr
        self._compute_predictive()

    def _activate(self, cols, prev_predictive, prev_active_counts,
                  prev_matching_counts):
        """Eq.-(3) semantics: predicted cells of active columns activate;
        columns with no predicted cell burst."""
        m = self.m_cells
        active: set[int] = set()
        winners: set[int] = set()
        bursting: list[int] = []
        cell_match = None
        predictive_by_col: dict[int, list[int]] = {}
        for cell in prev_predictive:
            predictive_by_col.setdefault(cell // m, []).append(cell)
        for col in cols.active_columns:
            predicted = predictive_by_col.get(col)
            if predicted:
                active.update(predicted)
                winners.add(self._best_predicted(predicted, prev_active_counts))
            else:
                base = col * m
                active.update(range(base, base + m))
                bursting.append(col)
                if cell_match is None:
                    cell_match = self._cell_best_match(prev_matching_counts)
                winners.add(self._burst_winner(col, cell_match))
        return active, winners, bursting

    def _best_predicted(self, predicted, prev_active_counts):
        if len(predicted) == 1:
            return predicted[0]

        def strength(cell):
            rows = self.segments_by_cell.get(cell, ())
            return max((int(prev_active_counts[r]) for r in rows), default=0)
        return min(predicted, key=lambda c: (-strength(c), c))

    def _cell_best_match(self, prev_matching_counts):
        """Per-cell maximum of the previous step's matching synapse counts."""
        cell_match = np.zeros(self.n_cells, dtype=np.int64)
        limit = len(prev_matching_counts)
        if limit:
            cells = self.seg_cell[:limit]
            valid = cells >= 0
            np.maximum.at(cell_match, cells[valid], prev_matching_counts[:limit][valid])
        return cell_match

    def _burst_winner(self, col, cell_match):
        """Cell with the best matching segment; ties go to the cell with the
        fewest segments, then to the lowest index."""
        base = col * self.m_cells
        m = self.m_cells
        match = cell_match[base:base + m]
        nsegs = self._n_segs_per_cell[base:base + m]
        i = np.lexsort((np.arange(m), nsegs, -match))[0]
        return base + int(i)

    def _best_matching_row(self, cell, prev_matching_counts):
        limit = len(prev_matching_counts)
        best, best_n = None, 0
        for r in self.segments_by_cell.get(cell, ()):
            n = int(prev_matching_counts[r]) if r < limit else 0
            if n > best_n:
                best, best_n = r, n
        return best

    def _learn(self, cols, active, winners, bursting,
               prev_active_arr, prev_winners, prev_active_rows,
               prev_matching_counts):
        if self.perm_inc == 0 and self.perm_dec == 0 and self.perm_punish == 0:
            return
        active_cols = set(cols.active_columns)
        reinforce, punish = [], []
        for r in prev_active_rows:
            owner = int(self.seg_cell[r])
            # (a) segments that correctly predicted a now-active cell
            if owner in active:
                reinforce.append(r)
            # (b) segments that predicted a cell whose column stayed silent
            elif owner // self.m_cells not in active_cols:
                punish.append(r)
        # (c) bursting columns: the winner grows or reinforces a segment
        # sampling previous winner cells
        grow_rows: list[int] = []
        new_rows: list[int] = []
        if bursting:
            sorted_prev_winners = sorted(prev_winners)
            winner_by_col = {w // self.m_cells: w for w in winners}
            for col in bursting:
                winner = winner_by_col[col]
                row = self._best_matching_row(winner, prev_matching_counts)
                if row is not None:
                    reinforce.append(row)
                    grow_rows.append(row)
                elif sorted_prev_winners:
                    new_rows.append(self.create_segment(winner))
        if reinforce:
            self._adapt_rows(np.asarray(reinforce), prev_active_arr)
        if punish:
            self._punish_rows(np.asarray(punish))
        if bursting and sorted_prev_winners:
            for row in grow_rows + new_rows:
                self._grow(row, sorted_prev_winners)

    def _adapt_rows(self, rows, prev_active_arr):
        """inc on synapses from previously active cells, dec on the rest;
        synapses driven to zero are destroyed."""
        self.seg_last_used[rows] = self._step
        presyn = self.seg_presyn[rows]
        perm = self.seg_perm[rows]
        valid = presyn != self._sentinel
        was_active = prev_active_arr[presyn]
        delta = np.where(was_active, self.perm_inc, -self.perm_dec)
        updated = np.clip(perm + np.where(valid, delta, 0.0), 0.0, 1.0)
        dead = valid & (updated <= 0.0)
        presyn[dead] = self._sentinel
        updated[dead] = 0.0
        self.seg_presyn[rows] = presyn
        self.seg_perm[rows] = updated

    def _punish_rows(self, rows):
        presyn = self.seg_presyn[rows]
        perm = self.seg_perm[rows]
        valid = presyn != self._sentinel
        updated = np.clip(perm - np.where(valid, self.perm_punish, 0.0), 0.0, 1.0)
        dead = valid & (updated <= 0.0)
        presyn[dead] = self._sentinel
        updated[dead] = 0.0
        self.seg_presyn[rows] = presyn
        self.seg_perm[rows] = updated

    def _grow(self, row, sorted_prev_winners):
        """Add synapses to previous winners until the segment samples
        sample_size of them, respecting the per-segment cap."""
        presyn = self.seg_presyn[row]
        existing = set(int(p) for p in presyn if p != self._sentinel)
        have = sum(1 for w in sorted_prev_winners if w in existing)
        budget = self.sample_size - have
        if budget <= 0:
            return
        slots = np.nonzero(presyn == self._sentinel)[0]
        own_col = int(self.seg_cell[row]) // self.m_cells
        slot_i = 0
        for w in sorted_prev_winners:
            if budget <= 0 or slot_i >= len(slots):
                break
            if w in existing or w // self.m_cells == own_col:
                continue
            s = slots[slot_i]
            self.seg_presyn[row, s] = w
            self.seg_perm[row, s] = self.initial_permanence
            slot_i += 1
            budget -= 1

    # ------------------------------------------------------------------
    # segment bookkeeping

    def create_segment(self, cell: int, synapses: dict[int, float] | None = None) -> int:
        """Attach a new segment to a cell, evicting the least recently used
        one when the per-cell cap is reached. Returns the segment's row id.
        Also used to implant segments in tests and during deserialization."""
        rows = self.segments_by_cell.setdefault(cell, [])
        if len(rows) >= self.max_segments_per_cell:
            victim = min(rows, key=lambda r: int(self.seg_last_used[r]))
            self.destroy_segment(victim)
        if self._free_rows:
            row = self._free_rows.pop()
        else:
            if self._n_rows == len(self.seg_cell):
                self._grow_capacity()
            row = self._n_rows
            self._n_rows += 1
        self.seg_presyn[row] = self._sentinel
        self.seg_perm[row] = 0.0
        self.seg_cell[row] = cell
        self.seg_last_used[row] = self._step
        rows.append(row)
        self._n_segs_per_cell[cell] += 1
        if synapses:
            if len(synapses) > self.max_synapses_per_segment:
                raise ValidationError("too many synapses for one segment")
            for i, (presyn, perm) in enumerate(sorted(synapses.items())):
                self.seg_presyn[row, i] = presyn
                self.seg_perm[row, i] = perm
        return row

    def destroy_segment(self, row: int) -> None:
        cell = int(self.seg_cell[row])
        self.segments_by_cell[cell].remove(row)
        self._n_segs_per_cell[cell] -= 1
        self.seg_cell[row] = -1
        self.seg_presyn[row] = self._sentinel
        self.seg_perm[row] = 0.0
        self._free_rows.append(row)

    def _grow_capacity(self):
        cap = len(self.seg_cell)
        pad = cap
        self.seg_presyn = np.vstack([
            self.seg_presyn,
            np.full((pad, self.max_synapses_per_segment), self._sentinel, dtype=np.int32),
        ])
        self.seg_perm = np.vstack([
            self.seg_perm,
            np.zeros((pad, self.max_synapses_per_segment), dtype=np.float32),
        ])
        self.seg_cell = np.concatenate([self.seg_cell, np.full(pad, -1, dtype=np.int32)])
        self.seg_last_used = np.concatenate([self.seg_last_used, np.zeros(pad, dtype=np.int64)])

    def synapses_of(self, row: int) -> dict[int, float]:
        """Live synapses of one segment as {presynaptic cell: permanence}."""
        presyn = self.seg_presyn[row]
        live = presyn != self._sentinel
        return {
            int(p): float(q)
            for p, q in zip(presyn[live], self.seg_perm[row][live])
        }

    def _compute_predictive(self):
        """Eq.-(2) semantics over the current active cells. Strict '>':
        a segment with exactly threshold established active synapses does
        not predict."""
        n = self._n_rows
        if n == 0 or not self.active_cells:
            self.predictive_cells = set()
            self._active_rows = np.empty(0, dtype=np.int64)
            self._active_counts = np.empty(0, dtype=np.int64)
            self._matching_counts = np.empty(0, dtype=np.int64)
            return
        presyn = self.seg_presyn[:n]
        act = self._active_arr[presyn]
        established = self.seg_perm[:n] >= self.connect_threshold
        active_counts = np.count_nonzero(act & established, axis=1)
        matching_counts = np.count_nonzero(act, axis=1)
        rows = np.nonzero(active_counts > self.activation_threshold)[0]
        self.predictive_cells = {
            int(c) for c in self.seg_cell[rows] if c >= 0
        }
        self._active_rows = rows
        self._active_counts = active_counts
        self._matching_counts = matching_counts

    # ------------------------------------------------------------------
    # queries

    @property
    def predictive_columns(self) -> set[int]:
        return {cell // self.m_cells for cell in self.predictive_cells}

    @property
    def active_columns(self) -> set[int]:
        return {cell // self.m_cells for cell in self.active_cells}

    def segment_count(self) -> int:
        return sum(len(v) for v in self.segments_by_cell.values())

    def reset(self) -> None:
        """Sequence boundary: clear activity but keep everything learned."""
        self.active_cells = set()
        self.winner_cells = set()
        self.predictive_cells = set()
        self._active_arr = np.zeros(self.n_cells + 1, dtype=bool)
        self._active_rows = np.empty(0, dtype=np.int64)
        self._active_counts = np.empty(0, dtype=np.int64)
        self._matching_counts = np.empty(0, dtype=np.int64)

    # ------------------------------------------------------------------
    # serialization

    def state_dict(self) -> dict:
        return {
            "params": {
                "n_columns": self.n_columns,
                "m_cells": self.m_cells,
                "activation_threshold": self.activation_threshold,
                "connect_threshold": self.connect_threshold,
                "initial_permanence": self.initial_permanence,
                "perm_inc": self.perm_inc,
                "perm_dec": self.perm_dec,
                "perm_punish": self.perm_punish,
                "sample_size": self.sample_size,
                "max_segments_per_cell": self.max_segments_per_cell,
                "max_synapses_per_segment": self.max_synapses_per_segment,
            },
            "segments": [
                [cell, sorted(self.synapses_of(row).items())]
                for cell, rows in sorted(self.segments_by_cell.items())
                for row in rows
            ],
        }

    @classmethod
    def from_state_dict(cls, state: dict) -> "TemporalMemory":
        tm = cls(**state["params"])
        for cell, synapses in state["segments"]:
            tm.create_segment(cell, dict(synapses))
        return tm
