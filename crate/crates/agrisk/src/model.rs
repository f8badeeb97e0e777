//! Domain model: year event tables, extended event loss tables, contract
//! structure, and the direct-access loss table behind event lookup.

use thiserror::Error;

/// One event occurrence inside a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOccurrence {
    pub event_id: u32,
    /// Fraction of the year, in [0, 1).
    pub timestamp: f64,
    /// Program-and-Event-Occurrence-Specific uniform draw.
    pub z_prog_e: f64,
}

/// A simulated year: event occurrences ordered by ascending timestamp.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trial {
    pub occurrences: Vec<EventOccurrence>,
}

/// Pre-simulated trials over a fixed event catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct YearEventTable {
    pub trials: Vec<Trial>,
    pub catalogue_size: u32,
}

/// One extended event loss record: the per-event loss distribution
/// parameters of an XELT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XeltRecord {
    pub event_id: u32,
    pub mean_loss: f64,
    /// Event-Occurrence-Specific uniform draw.
    pub z_e: f64,
    /// Independent standard deviation of loss.
    pub sigma_i: f64,
    /// Correlated standard deviation of loss.
    pub sigma_c: f64,
    pub max_loss: f64,
}

impl XeltRecord {
    /// Invariant check; `None` means the record is well formed.
    pub fn invariant_violation(&self) -> Option<String> {
        if !(self.max_loss > 0.0) {
            return Some(format!("max_loss must be positive, got {}", self.max_loss));
        }
        if self.mean_loss < 0.0 {
            return Some(format!("mean_loss must be nonnegative, got {}", self.mean_loss));
        }
        if self.mean_loss > self.max_loss {
            return Some(format!(
                "mean_loss {} exceeds max_loss {}",
                self.mean_loss, self.max_loss
            ));
        }
        if self.sigma_i < 0.0 || self.sigma_c < 0.0 {
            return Some(format!(
                "standard deviations must be nonnegative, got sigma_i={} sigma_c={}",
                self.sigma_i, self.sigma_c
            ));
        }
        if !(0.0..=1.0).contains(&self.z_e) {
            return Some(format!("z_e must lie in [0,1], got {}", self.z_e));
        }
        None
    }
}

/// Per-loss-set treaty terms, applied as share · min(max(loss − retention, 0), limit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XeltTerms {
    pub retention: f64,
    pub limit: f64,
    pub share: f64,
}

impl XeltTerms {
    /// Pass-through terms: zero retention, unbounded limit, full share.
    pub fn identity() -> Self {
        XeltTerms { retention: 0.0, limit: f64::MAX, share: 1.0 }
    }

    #[inline]
    pub fn apply(&self, loss: f64) -> f64 {
        self.share * (loss - self.retention).max(0.0).min(self.limit)
    }
}

/// Occurrence and aggregate retention/limit terms of a layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerTerms {
    pub occ_retention: f64,
    pub occ_limit: f64,
    pub agg_retention: f64,
    pub agg_limit: f64,
}

/// A contract layer: the XELTs it covers, per-XELT terms, and layer terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub xelt_ids: Vec<usize>,
    pub xelt_terms: Vec<XeltTerms>,
    pub terms: LayerTerms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    pub programs: Vec<Program>,
}

impl Portfolio {
    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.programs.iter().flat_map(|p| p.layers.iter())
    }

    pub fn num_layers(&self) -> usize {
        self.programs.iter().map(|p| p.layers.len()).sum()
    }
}

/// One dense slot of the loss table. Absence is encoded by a negative
/// sentinel in `mean_loss` so the hot path tests a single load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSlot {
    pub mean_loss: f64,
    pub z_e: f64,
    pub sigma_i: f64,
    pub sigma_c: f64,
    pub max_loss: f64,
}

impl LossSlot {
    pub const ABSENT: LossSlot =
        LossSlot { mean_loss: -1.0, z_e: 0.0, sigma_i: 0.0, sigma_c: 0.0, max_loss: 0.0 };

    #[inline]
    pub fn is_present(&self) -> bool {
        self.mean_loss >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("XELT {xelt}: duplicate record for event {event_id}")]
    DuplicateEvent { xelt: usize, event_id: u32 },
    #[error("XELT {xelt}: event {event_id} outside catalogue of size {catalogue_size}")]
    EventOutOfRange { xelt: usize, event_id: u32, catalogue_size: u32 },
}

/// Direct-access event loss table, XELT-major: row per XELT, one slot per
/// catalogue event. Trades memory for constant-time lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    slots: Vec<LossSlot>,
    num_xelts: usize,
    catalogue_size: u32,
}

impl LossTable {
    pub fn num_xelts(&self) -> usize {
        self.num_xelts
    }

    pub fn catalogue_size(&self) -> u32 {
        self.catalogue_size
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn populated_slots(&self) -> usize {
        self.slots.iter().filter(|s| s.is_present()).count()
    }

    /// Constant-time lookup. Absent means the event carries no loss in this
    /// XELT. Index validity is the caller's contract; debug builds assert.
    #[inline]
    pub fn lookup(&self, xelt: usize, event_id: u32) -> Option<&LossSlot> {
        debug_assert!(xelt < self.num_xelts, "xelt index {xelt} out of range");
        debug_assert!(event_id < self.catalogue_size, "event id {event_id} out of range");
        let slot = &self.slots[xelt * self.catalogue_size as usize + event_id as usize];
        slot.is_present().then_some(slot)
    }

    /// Reconstruct the sparse record list of one XELT by exhaustive scan.
    pub fn records_of(&self, xelt: usize) -> Vec<XeltRecord> {
        let base = xelt * self.catalogue_size as usize;
        (0..self.catalogue_size)
            .filter_map(|event_id| {
                let s = &self.slots[base + event_id as usize];
                s.is_present().then_some(XeltRecord {
                    event_id,
                    mean_loss: s.mean_loss,
                    z_e: s.z_e,
                    sigma_i: s.sigma_i,
                    sigma_c: s.sigma_c,
                    max_loss: s.max_loss,
                })
            })
            .collect()
    }
}

/// Build the direct-access table from sparse per-XELT record lists.
pub fn build_loss_table(
    xelts: &[Vec<XeltRecord>],
    catalogue_size: u32,
) -> Result<LossTable, ValidationError> {
    let num_xelts = xelts.len();
    let mut slots = vec![LossSlot::ABSENT; num_xelts * catalogue_size as usize];
    for (xelt, records) in xelts.iter().enumerate() {
        let base = xelt * catalogue_size as usize;
        for rec in records {
            if rec.event_id >= catalogue_size {
                return Err(ValidationError::EventOutOfRange {
                    xelt,
                    event_id: rec.event_id,
                    catalogue_size,
                });
            }
            let slot = &mut slots[base + rec.event_id as usize];
            if slot.is_present() {
                return Err(ValidationError::DuplicateEvent { xelt, event_id: rec.event_id });
            }
            *slot = LossSlot {
                mean_loss: rec.mean_loss,
                z_e: rec.z_e,
                sigma_i: rec.sigma_i,
                sigma_c: rec.sigma_c,
                max_loss: rec.max_loss,
            };
        }
    }
    Ok(LossTable { slots, num_xelts, catalogue_size })
}

/// One violated invariant, with the path that locates it.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Check every portfolio and loss-table invariant. An empty report means
/// the portfolio is runnable against the table.
pub fn validate_portfolio(pf: &Portfolio, table: &LossTable) -> Vec<Finding> {
    let mut findings = Vec::new();
    if pf.programs.is_empty() {
        findings.push(Finding {
            path: "portfolio".into(),
            message: "portfolio has no programs".into(),
        });
    }
    for (pi, program) in pf.programs.iter().enumerate() {
        if program.layers.is_empty() {
            findings.push(Finding {
                path: format!("program {pi}"),
                message: "program has no layers".into(),
            });
        }
        for (li, layer) in program.layers.iter().enumerate() {
            let path = format!("program {pi} layer {li}");
            if layer.xelt_ids.is_empty() {
                findings.push(Finding {
                    path: path.clone(),
                    message: "layer covers no XELTs".into(),
                });
            }
            if layer.xelt_terms.len() != layer.xelt_ids.len() {
                findings.push(Finding {
                    path: path.clone(),
                    message: format!(
                        "{} XELT ids but {} XELT term sets",
                        layer.xelt_ids.len(),
                        layer.xelt_terms.len()
                    ),
                });
            }
            let mut seen = std::collections::HashSet::new();
            for (xi, &xelt_id) in layer.xelt_ids.iter().enumerate() {
                if xelt_id >= table.num_xelts() {
                    findings.push(Finding {
                        path: format!("{path} xelt {xi}"),
                        message: format!(
                            "xelt_id {xelt_id} out of range (table has {})",
                            table.num_xelts()
                        ),
                    });
                }
                if !seen.insert(xelt_id) {
                    findings.push(Finding {
                        path: format!("{path} xelt {xi}"),
                        message: format!("duplicate xelt_id {xelt_id}"),
                    });
                }
            }
            for (xi, terms) in layer.xelt_terms.iter().enumerate() {
                if !(terms.limit > 0.0)
                    || terms.retention < 0.0
                    || !(terms.share > 0.0 && terms.share <= 1.0)
                {
                    findings.push(Finding {
                        path: format!("{path} xelt {xi}"),
                        message: format!(
                            "bad XELT terms: retention={} limit={} share={}",
                            terms.retention, terms.limit, terms.share
                        ),
                    });
                }
            }
            let t = &layer.terms;
            if !(t.occ_limit > 0.0)
                || !(t.agg_limit > 0.0)
                || t.occ_retention < 0.0
                || t.agg_retention < 0.0
                || !t.occ_retention.is_finite()
                || !t.agg_retention.is_finite()
            {
                findings.push(Finding {
                    path: path.clone(),
                    message: format!(
                        "bad layer terms: occ=({}, {}) agg=({}, {})",
                        t.occ_retention, t.occ_limit, t.agg_retention, t.agg_limit
                    ),
                });
            }
        }
    }
    for xelt in 0..table.num_xelts() {
        for rec in table.records_of(xelt) {
            if let Some(msg) = rec.invariant_violation() {
                findings.push(Finding {
                    path: format!("xelt {xelt} event {}", rec.event_id),
                    message: msg,
                });
            }
        }
    }
    findings
}

/// Check YET invariants against a catalogue size.
pub fn validate_yet(yet: &YearEventTable) -> Vec<Finding> {
    let mut findings = Vec::new();
    for (ti, trial) in yet.trials.iter().enumerate() {
        let mut prev_ts = f64::NEG_INFINITY;
        for (oi, occ) in trial.occurrences.iter().enumerate() {
            let path = format!("trial {ti} occurrence {oi}");
            if occ.event_id >= yet.catalogue_size {
                findings.push(Finding {
                    path: path.clone(),
                    message: format!(
                        "event_id {} outside catalogue of size {}",
                        occ.event_id, yet.catalogue_size
                    ),
                });
            }
            if !(0.0..1.0).contains(&occ.timestamp) {
                findings.push(Finding {
                    path: path.clone(),
                    message: format!("timestamp {} outside [0,1)", occ.timestamp),
                });
            }
            if occ.timestamp < prev_ts {
                findings.push(Finding {
                    path: path.clone(),
                    message: "occurrences not sorted by timestamp".into(),
                });
            }
            prev_ts = occ.timestamp;
            if !(0.0..=1.0).contains(&occ.z_prog_e) {
                findings.push(Finding {
                    path,
                    message: format!("z_prog_e {} outside [0,1]", occ.z_prog_e),
                });
            }
        }
    }
    findings
}
