//! Grid geometry of the static trap array and the two-layer occupancy state.
//!
//! Indices are 0-based and row-major. A *column* is the set of traps sharing
//! a `col` value; rows grow downward, so "above" the target block means
//! smaller row indices.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of the static trap array and of the centered target block.
///
/// When a margin cannot be split evenly the extra row goes below the block
/// and the extra column goes to its right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGridSpec", into = "RawGridSpec")]
pub struct GridSpec {
    width: usize,
    height: usize,
    target_width: usize,
    target_height: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGridSpec {
    width: usize,
    height: usize,
    target_width: usize,
    target_height: usize,
}

impl TryFrom<RawGridSpec> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGridSpec) -> Result<Self> {
        GridSpec::new(raw.width, raw.height, raw.target_width, raw.target_height)
    }
}

impl From<GridSpec> for RawGridSpec {
    fn from(spec: GridSpec) -> Self {
        RawGridSpec {
            width: spec.width,
            height: spec.height,
            target_width: spec.target_width,
            target_height: spec.target_height,
        }
    }
}

impl GridSpec {
    pub fn new(width: usize, height: usize, target_width: usize, target_height: usize) -> Result<Self> {
        if width == 0 || height == 0 || target_width == 0 || target_height == 0 {
            return Err(Error::usage("grid and target dimensions must be positive"));
        }
        if target_width > width || target_height > height {
            return Err(Error::usage(format!(
                "target {target_width}x{target_height} does not fit in grid {width}x{height}"
            )));
        }
        if width.checked_mul(height).is_none_or(|n| n > u32::MAX as usize) {
            return Err(Error::usage("grid too large"));
        }
        Ok(GridSpec { width, height, target_width, target_height })
    }

    /// Square target of `side x side` atoms in a `side`-wide array of `height` rows.
    pub fn square(side: usize, height: usize) -> Result<Self> {
        Self::new(side, height, side, side)
    }

    /// A single column of `traps` traps with a centered chain of `target` atoms.
    pub fn chain(traps: usize, target: usize) -> Result<Self> {
        Self::new(1, traps, 1, target)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn target_width(&self) -> usize {
        self.target_width
    }

    pub fn target_height(&self) -> usize {
        self.target_height
    }

    /// Total number of static traps.
    pub fn num_traps(&self) -> usize {
        self.width * self.height
    }

    /// Number of atoms in the target configuration.
    pub fn target_size(&self) -> usize {
        self.target_width * self.target_height
    }

    /// Overhead factor: traps per target atom.
    pub fn overhead(&self) -> f64 {
        self.num_traps() as f64 / self.target_size() as f64
    }

    /// Rows spanned by the target block.
    pub fn target_rows(&self) -> Range<usize> {
        let top = (self.height - self.target_height) / 2;
        top..top + self.target_height
    }

    /// Columns spanned by the target block.
    pub fn target_cols(&self) -> Range<usize> {
        let left = (self.width - self.target_width) / 2;
        left..left + self.target_width
    }

    /// Number of target atoms wanted in column `col`.
    pub fn desired_in_column(&self, col: usize) -> usize {
        if self.target_cols().contains(&col) {
            self.target_height
        } else {
            0
        }
    }

    pub fn contains(&self, t: TrapIndex) -> bool {
        t.col < self.width && t.row < self.height
    }

    pub fn in_target(&self, t: TrapIndex) -> bool {
        self.target_cols().contains(&t.col) && self.target_rows().contains(&t.row)
    }

    /// Row-major linear index of a trap.
    pub fn linear(&self, t: TrapIndex) -> usize {
        debug_assert!(self.contains(t));
        t.row * self.width + t.col
    }

    pub fn trap_at(&self, linear: usize) -> TrapIndex {
        TrapIndex::new(linear % self.width, linear / self.width)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} target in {}x{} traps", self.target_width, self.target_height, self.width, self.height)
    }
}

/// Coordinates of a static trap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrapIndex {
    pub col: usize,
    pub row: usize,
}

impl TrapIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        TrapIndex { col, row }
    }

    pub fn manhattan(self, other: TrapIndex) -> usize {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }
}

impl Ord for TrapIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.row, self.col).cmp(&(other.row, other.col))
    }
}

impl PartialOrd for TrapIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TrapIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// The set of static traps spanned by the centered target block, in
/// row-major order.
pub fn target_region(spec: &GridSpec) -> Vec<TrapIndex> {
    spec.target_rows().flat_map(|row| spec.target_cols().map(move |col| TrapIndex::new(col, row))).collect()
}

/// Stable identity of an atom, assigned at loading. Only used for bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomId(pub u32);

/// An atom together with its corruption: the probability that it is still
/// present given its control history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub id: AtomId,
    pub corruption: f64,
}

impl Atom {
    pub fn fresh(id: AtomId) -> Self {
        Atom { id, corruption: 1.0 }
    }
}

/// Positions of detected atoms in the static layer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    positions: BTreeSet<TrapIndex>,
}

impl Configuration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, t: TrapIndex) -> bool {
        self.positions.contains(&t)
    }

    pub fn insert(&mut self, t: TrapIndex) -> bool {
        self.positions.insert(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = TrapIndex> + '_ {
        self.positions.iter().copied()
    }

    /// True if every target trap of `spec` is occupied.
    pub fn contains_target(&self, spec: &GridSpec) -> bool {
        target_region(spec).into_iter().all(|t| self.positions.contains(&t))
    }
}

impl FromIterator<TrapIndex> for Configuration {
    fn from_iter<I: IntoIterator<Item = TrapIndex>>(iter: I) -> Self {
        Configuration { positions: iter.into_iter().collect() }
    }
}

/// Occupancy of the static trap layer and of the dynamic (movable) layer.
///
/// Both layers are indexed by static trap position: a dynamic trap sitting on
/// top of static trap `t` is stored at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayState {
    spec: GridSpec,
    static_layer: Vec<Option<Atom>>,
    dynamic_layer: Vec<Option<Atom>>,
    next_id: u32,
}

impl ArrayState {
    pub fn empty(spec: GridSpec) -> Self {
        let n = spec.num_traps();
        ArrayState { spec, static_layer: vec![None; n], dynamic_layer: vec![None; n], next_id: 0 }
    }

    /// Fresh atoms (corruption 1) at every position of `config`. Ids follow
    /// row-major order.
    pub fn from_configuration(spec: GridSpec, config: &Configuration) -> Result<Self> {
        let mut state = ArrayState::empty(spec);
        for t in config.iter() {
            if !spec.contains(t) {
                return Err(Error::usage(format!("trap {t} lies outside {spec}")));
            }
            state.load(t);
        }
        Ok(state)
    }

    /// Builds a state from `(col, row)` pairs; mostly for tests and examples.
    pub fn from_positions(spec: GridSpec, positions: &[(usize, usize)]) -> Result<Self> {
        let config: Configuration = positions.iter().map(|&(c, r)| TrapIndex::new(c, r)).collect();
        if config.len() != positions.len() {
            return Err(Error::usage("duplicate positions"));
        }
        Self::from_configuration(spec, &config)
    }

    /// Places a fresh atom in an empty static trap and returns its id.
    pub fn load(&mut self, t: TrapIndex) -> AtomId {
        let i = self.spec.linear(t);
        debug_assert!(self.static_layer[i].is_none());
        let id = AtomId(self.next_id);
        self.next_id += 1;
        self.static_layer[i] = Some(Atom::fresh(id));
        id
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Number of ids handed out so far; ids are dense in `0..issued_ids()`.
    pub fn issued_ids(&self) -> usize {
        self.next_id as usize
    }

    pub fn static_atom(&self, t: TrapIndex) -> Option<&Atom> {
        if !self.spec.contains(t) {
            return None;
        }
        self.static_layer[self.spec.linear(t)].as_ref()
    }

    pub fn dynamic_atom(&self, t: TrapIndex) -> Option<&Atom> {
        if !self.spec.contains(t) {
            return None;
        }
        self.dynamic_layer[self.spec.linear(t)].as_ref()
    }

    pub fn is_static_occupied(&self, t: TrapIndex) -> bool {
        self.static_atom(t).is_some()
    }

    pub fn is_dynamic_occupied(&self, t: TrapIndex) -> bool {
        self.dynamic_atom(t).is_some()
    }

    pub(crate) fn static_slot(&mut self, t: TrapIndex) -> &mut Option<Atom> {
        let i = self.spec.linear(t);
        &mut self.static_layer[i]
    }

    pub(crate) fn dynamic_slot(&mut self, t: TrapIndex) -> &mut Option<Atom> {
        let i = self.spec.linear(t);
        &mut self.dynamic_layer[i]
    }

    /// Row-ordered snapshot of static occupancy along a column.
    pub fn column_view(&self, col: usize) -> Result<Vec<bool>> {
        if col >= self.spec.width() {
            return Err(Error::usage(format!("column {col} out of range for width {}", self.spec.width())));
        }
        Ok((0..self.spec.height()).map(|row| self.is_static_occupied(TrapIndex::new(col, row))).collect())
    }

    /// Occupied rows of a column in increasing order.
    pub fn column_rows(&self, col: usize) -> Vec<usize> {
        (0..self.spec.height()).filter(|&row| self.is_static_occupied(TrapIndex::new(col, row))).collect()
    }

    pub fn static_count(&self) -> usize {
        self.static_layer.iter().filter(|a| a.is_some()).count()
    }

    pub fn dynamic_count(&self) -> usize {
        self.dynamic_layer.iter().filter(|a| a.is_some()).count()
    }

    pub fn dynamic_is_empty(&self) -> bool {
        self.dynamic_layer.iter().all(Option::is_none)
    }

    /// Detected positions in the static layer.
    pub fn configuration(&self) -> Configuration {
        self.static_layer.iter().enumerate().filter(|(_, a)| a.is_some()).map(|(i, _)| self.spec.trap_at(i)).collect()
    }

    pub fn contains_target(&self) -> bool {
        target_region(&self.spec).into_iter().all(|t| self.is_static_occupied(t))
    }

    /// Every atom in either layer, static layer first.
    pub fn atoms(&self) -> impl Iterator<Item = (TrapIndex, &Atom)> + '_ {
        let spec = self.spec;
        self.static_layer
            .iter()
            .chain(self.dynamic_layer.iter())
            .enumerate()
            .filter_map(move |(i, a)| a.as_ref().map(|a| (spec.trap_at(i % spec.num_traps()), a)))
    }

    pub(crate) fn atoms_mut(&mut self) -> impl Iterator<Item = &mut Atom> + '_ {
        self.static_layer.iter_mut().chain(self.dynamic_layer.iter_mut()).filter_map(Option::as_mut)
    }

    /// Removes every atom for which `keep` returns false, in both layers.
    pub(crate) fn retain_atoms(&mut self, mut keep: impl FnMut(&mut Atom) -> bool) {
        for slot in self.static_layer.iter_mut().chain(self.dynamic_layer.iter_mut()) {
            if let Some(atom) = slot {
                if !keep(atom) {
                    *slot = None;
                }
            }
        }
    }
}

impl fmt::Display for ArrayState {
    /// ASCII picture: `o` static atom, `x` target trap left empty, `.` empty,
    /// `D` dynamic atom over an empty static trap, `B` both layers occupied.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..self.spec.height() {
            for col in 0..self.spec.width() {
                let t = TrapIndex::new(col, row);
                let c = match (self.is_static_occupied(t), self.is_dynamic_occupied(t)) {
                    (true, true) => 'B',
                    (false, true) => 'D',
                    (true, false) => 'o',
                    (false, false) if self.spec.in_target(t) => 'x',
                    (false, false) => '.',
                };
                write!(f, "{c}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_region_of_an_8_by_16_grid() {
        let spec = GridSpec::new(8, 16, 8, 8).unwrap();
        let region = target_region(&spec);
        assert_eq!(region.len(), 64);
        assert!(region.iter().all(|t| (4..=11).contains(&t.row)));
        assert_eq!(spec.overhead(), 2.0);
    }

    #[test]
    fn queries_outside_the_grid_see_nothing() {
        let spec = GridSpec::new(3, 4, 1, 2).unwrap();
        let state = ArrayState::from_positions(spec, &[(0, 1), (0, 2)]).unwrap();
        // (3, 0) would alias (0, 1) under row-major indexing
        assert!(!state.is_static_occupied(TrapIndex::new(3, 0)));
        assert!(state.static_atom(TrapIndex::new(0, 9)).is_none());
        assert!(!state.is_dynamic_occupied(TrapIndex::new(7, 7)));
    }

    #[test]
    fn degenerate_grid() {
        let spec = GridSpec::new(1, 1, 1, 1).unwrap();
        assert_eq!(target_region(&spec), vec![TrapIndex::new(0, 0)]);
    }

    #[test]
    fn odd_margins_put_extra_space_below_and_right() {
        let spec = GridSpec::new(4, 7, 2, 2).unwrap();
        assert_eq!(spec.target_cols(), 1..3);
        assert_eq!(spec.target_rows(), 2..4);
        let spec = GridSpec::new(5, 8, 2, 3).unwrap();
        // 3 spare columns: 1 left, 2 right; 5 spare rows: 2 above, 3 below
        assert_eq!(spec.target_cols(), 1..3);
        assert_eq!(spec.target_rows(), 2..5);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(GridSpec::new(0, 4, 1, 1).is_err());
        assert!(GridSpec::new(4, 4, 5, 1).is_err());
        assert!(GridSpec::new(4, 4, 2, 5).is_err());
    }

    #[test]
    fn column_views() {
        let spec = GridSpec::new(4, 8, 2, 4).unwrap();
        let empty = ArrayState::empty(spec);
        assert_eq!(empty.column_view(1).unwrap(), vec![false; 8]);
        assert!(empty.column_view(4).is_err());

        let state = ArrayState::from_positions(spec, &[(2, 0), (2, 5)]).unwrap();
        let view = state.column_view(2).unwrap();
        let occupied: Vec<usize> = view.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| i).collect();
        assert_eq!(occupied, vec![0, 5]);

        let all: Configuration = (0..spec.num_traps()).map(|i| spec.trap_at(i)).collect();
        let full = ArrayState::from_configuration(spec, &all).unwrap();
        assert_eq!(full.column_view(3).unwrap(), vec![true; 8]);
    }

    #[test]
    fn out_of_grid_configuration_is_rejected() {
        let spec = GridSpec::new(2, 2, 1, 1).unwrap();
        let config: Configuration = [TrapIndex::new(2, 0)].into_iter().collect();
        assert!(ArrayState::from_configuration(spec, &config).is_err());
    }

    #[test]
    fn grid_spec_serde_validates() {
        let ok: GridSpec =
            serde_json::from_str(r#"{"width":4,"height":8,"target_width":4,"target_height":4}"#).unwrap();
        assert_eq!(ok.num_traps(), 32);
        assert!(
            serde_json::from_str::<GridSpec>(r#"{"width":4,"height":8,"target_width":5,"target_height":4}"#).is_err()
        );
        assert!(serde_json::from_str::<GridSpec>(
            r#"{"width":4,"height":8,"target_width":4,"target_height":4,"depth":1}"#
        )
        .is_err());
    }
}
