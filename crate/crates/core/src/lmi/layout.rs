use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::{AffineMatrix, LmiError};

/// Decision matrices of the observer LMIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotId {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    R1,
    R2,
    R3,
    R4,
    M1,
    M2,
    P1,
    P2,
    Lambda1,
    Lambda2,
    G1,
    G2,
    W1,
    W2,
}

impl SlotId {
    pub const ALL: [SlotId; 19] = [
        SlotId::Q1,
        SlotId::Q2,
        SlotId::Q3,
        SlotId::Q4,
        SlotId::Q5,
        SlotId::R1,
        SlotId::R2,
        SlotId::R3,
        SlotId::R4,
        SlotId::M1,
        SlotId::M2,
        SlotId::P1,
        SlotId::P2,
        SlotId::Lambda1,
        SlotId::Lambda2,
        SlotId::G1,
        SlotId::G2,
        SlotId::W1,
        SlotId::W2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SlotId::Q1 => "Q1",
            SlotId::Q2 => "Q2",
            SlotId::Q3 => "Q3",
            SlotId::Q4 => "Q4",
            SlotId::Q5 => "Q5",
            SlotId::R1 => "R1",
            SlotId::R2 => "R2",
            SlotId::R3 => "R3",
            SlotId::R4 => "R4",
            SlotId::M1 => "M1",
            SlotId::M2 => "M2",
            SlotId::P1 => "P1",
            SlotId::P2 => "P2",
            SlotId::Lambda1 => "Lambda1",
            SlotId::Lambda2 => "Lambda2",
            SlotId::G1 => "G1",
            SlotId::G2 => "G2",
            SlotId::W1 => "W1",
            SlotId::W2 => "W2",
        }
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SlotId {
    type Err = LmiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SlotId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| LmiError::UnknownSlot(s.to_string()))
    }
}

/// Structure of a decision matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Symmetric(usize),
    Diagonal(usize),
    Full { rows: usize, cols: usize },
}

impl SlotKind {
    pub fn shape(self) -> (usize, usize) {
        match self {
            SlotKind::Symmetric(d) | SlotKind::Diagonal(d) => (d, d),
            SlotKind::Full { rows, cols } => (rows, cols),
        }
    }

    /// Number of free scalar entries.
    pub fn coordinate_count(self) -> usize {
        match self {
            SlotKind::Symmetric(d) => d * (d + 1) / 2,
            SlotKind::Diagonal(d) => d,
            SlotKind::Full { rows, cols } => rows * cols,
        }
    }

    /// Matrix positions of each free coordinate, in packing order. A
    /// symmetric off-diagonal coordinate owns both `(i, j)` and `(j, i)`.
    fn positions(self) -> Vec<(usize, usize)> {
        match self {
            SlotKind::Symmetric(d) => (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect(),
            SlotKind::Diagonal(d) => (0..d).map(|i| (i, i)).collect(),
            SlotKind::Full { rows, cols } => {
                (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotSpec {
    pub id: SlotId,
    pub kind: SlotKind,
    /// First scalar coordinate owned by this slot.
    pub offset: usize,
}

impl SlotSpec {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.kind.coordinate_count()
    }
}

/// Concrete values of every scalar decision coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment(pub DVector<f64>);

impl Assignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Maps decision matrices onto contiguous ranges of scalar coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionLayout {
    slots: Vec<SlotSpec>,
    len: usize,
}

impl DecisionLayout {
    pub fn new(kinds: impl IntoIterator<Item = (SlotId, SlotKind)>) -> Self {
        let mut offset = 0;
        let slots = kinds
            .into_iter()
            .map(|(id, kind)| {
                let spec = SlotSpec { id, kind, offset };
                offset += kind.coordinate_count();
                spec
            })
            .collect();
        Self { slots, len: offset }
    }

    /// Slots of the observer conditions for `n` genes and `r_m`/`r_p`
    /// outputs. With `free_gains == false` the `W` slots are omitted and the
    /// gains enter as fixed data.
    pub fn observer(n: usize, r_m: usize, r_p: usize, free_gains: bool) -> Self {
        use SlotId::*;
        let mut kinds = vec![
            (Q1, SlotKind::Symmetric(n)),
            (Q2, SlotKind::Symmetric(2 * n)),
            (Q3, SlotKind::Symmetric(n)),
            (Q4, SlotKind::Symmetric(2 * n)),
            (Q5, SlotKind::Symmetric(n)),
            (R1, SlotKind::Symmetric(n)),
            (R2, SlotKind::Symmetric(n)),
            (R3, SlotKind::Symmetric(n)),
            (R4, SlotKind::Symmetric(n)),
            (M1, SlotKind::Symmetric(n)),
            (M2, SlotKind::Symmetric(n)),
            (P1, SlotKind::Diagonal(n)),
            (P2, SlotKind::Diagonal(n)),
            (Lambda1, SlotKind::Diagonal(n)),
            (Lambda2, SlotKind::Diagonal(n)),
            (G1, SlotKind::Full { rows: 2 * n, cols: 2 * n }),
            (G2, SlotKind::Full { rows: 2 * n, cols: 2 * n }),
        ];
        if free_gains {
            kinds.push((W1, SlotKind::Full { rows: n, cols: r_m }));
            kinds.push((W2, SlotKind::Full { rows: n, cols: r_p }));
        }
        Self::new(kinds)
    }

    /// Total number of scalar coordinates.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn slots(&self) -> &[SlotSpec] {
        &self.slots
    }

    pub fn slot(&self, id: SlotId) -> Option<&SlotSpec> {
        self.slots.iter().find(|s| s.id == id)
    }

    fn require(&self, id: SlotId) -> Result<&SlotSpec, LmiError> {
        self.slot(id).ok_or(LmiError::MissingSlot(id))
    }

    /// The slot as an affine expression in its own coordinates.
    pub fn expr(&self, id: SlotId) -> Result<AffineMatrix, LmiError> {
        let spec = self.require(id)?;
        let (rows, cols) = spec.kind.shape();
        let mut out = AffineMatrix::zeros(rows, cols);
        for (k, (i, j)) in spec.kind.positions().into_iter().enumerate() {
            let mut basis = DMatrix::zeros(rows, cols);
            basis[(i, j)] = 1.0;
            if matches!(spec.kind, SlotKind::Symmetric(_)) {
                basis[(j, i)] = 1.0;
            }
            out.add_assign(&AffineMatrix::coordinate(spec.offset + k, basis));
        }
        Ok(out)
    }

    /// Reads a slot's matrix out of an assignment.
    pub fn unpack(&self, x: &Assignment, id: SlotId) -> Result<DMatrix<f64>, LmiError> {
        self.check_len(x)?;
        let spec = self.require(id)?;
        let (rows, cols) = spec.kind.shape();
        let mut out = DMatrix::zeros(rows, cols);
        for (k, (i, j)) in spec.kind.positions().into_iter().enumerate() {
            let v = x.0[spec.offset + k];
            out[(i, j)] = v;
            if matches!(spec.kind, SlotKind::Symmetric(_)) {
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    /// Builds an assignment from one matrix per slot. Symmetric slots read
    /// their upper triangle, diagonal slots their diagonal.
    pub fn pack(&self, mut value: impl FnMut(SlotId) -> Option<DMatrix<f64>>) -> Result<Assignment, LmiError> {
        let mut x = DVector::zeros(self.len);
        for spec in &self.slots {
            let m = value(spec.id).ok_or(LmiError::MissingSlot(spec.id))?;
            if m.shape() != spec.kind.shape() {
                return Err(LmiError::SlotShape {
                    slot: spec.id,
                    expected: spec.kind.shape(),
                    got: m.shape(),
                });
            }
            for (k, pos) in spec.kind.positions().into_iter().enumerate() {
                x[spec.offset + k] = m[pos];
            }
        }
        Ok(Assignment(x))
    }

    /// Convenience wrapper around [`DecisionLayout::pack`].
    pub fn pack_map(&self, values: &BTreeMap<SlotId, DMatrix<f64>>) -> Result<Assignment, LmiError> {
        self.pack(|id| values.get(&id).cloned())
    }

    /// Identity for every square slot and zero for the rectangular ones
    /// (`G`, `W`).
    pub fn identity_assignment(&self) -> Assignment {
        self.pack(|id| {
            let spec = self.slot(id)?;
            Some(match spec.kind {
                SlotKind::Symmetric(d) | SlotKind::Diagonal(d) => DMatrix::identity(d, d),
                SlotKind::Full { rows, cols } => DMatrix::zeros(rows, cols),
            })
        })
        .expect("every slot is populated")
    }

    pub fn check_len(&self, x: &Assignment) -> Result<(), LmiError> {
        if x.len() != self.len {
            return Err(LmiError::DimensionMismatch { expected: self.len, got: x.len() });
        }
        Ok(())
    }
}
