use serde::Serialize;

/// Where a verdict came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Declared by the family's closed form (holds for every k).
    Analytic,
    /// Checked in exact rational arithmetic up to a finite horizon.
    Exact,
    /// Checked in floating point up to a finite horizon.
    Sampled,
}

/// An index (and optionally an order) at which a property fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub value: String,
}

/// A yes/no/undecided answer together with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: Option<bool>,
    pub basis: Basis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn analytic(holds: bool) -> Self {
        Self {
            holds: Some(holds),
            basis: Basis::Analytic,
            horizon: None,
            witness: None,
        }
    }

    pub fn checked(holds: Option<bool>, basis: Basis, horizon: usize) -> Self {
        Self {
            holds,
            basis,
            horizon: Some(horizon),
            witness: None,
        }
    }

    pub fn with_witness(mut self, w: Option<Witness>) -> Self {
        self.witness = w;
        self
    }

    pub fn is_true(&self) -> bool {
        self.holds == Some(true)
    }

    pub fn is_false(&self) -> bool {
        self.holds == Some(false)
    }
}
