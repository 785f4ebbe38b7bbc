use serde::{Deserialize, Serialize};

/// Outcome of one sprinkling or resampling step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SprinkleReport {
    /// Bad nodes (k-NN), empty boxes (contact) or bad boxes (resampling).
    pub bad_count: usize,
    /// Points added by the step.
    pub inserted: usize,
    /// Whether the step achieved what it is meant to guarantee.
    pub target_event_holds: bool,
    /// Largest relevant radius after the step, where one is defined.
    pub max_post_radius: Option<f64>,
    /// Change of the functional caused by the step.
    pub excess: f64,
    /// Deterministic bound on `excess`, where one is known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_bound: Option<f64>,
    /// Dense resampling only: every box is bounded after the step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_boxes_bounded: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxSource {
    Original,
    Resampled,
}

/// Per-box record of the sequential dense resampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxState {
    pub box_index: usize,
    pub source: BoxSource,
    /// Bounded with respect to the final configuration.
    pub bounded: bool,
    /// Good with respect to the original process.
    pub good: bool,
    /// The neighbour estimate with the smallest margin over its threshold.
    pub estimate: f64,
    pub threshold: f64,
    /// Goodness under the independent copy, evaluated only for bad boxes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub good_resampled: Option<bool>,
    /// Interior of the box bounded under the copy, evaluated only for bad boxes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_bounded: Option<bool>,
}

pub const BOX_STATE_COLUMNS: [&str; 6] = ["box_index", "source", "bounded", "good", "estimate", "threshold"];

impl BoxState {
    pub fn csv_row(&self) -> [String; 6] {
        [
            self.box_index.to_string(),
            match self.source {
                BoxSource::Original => "original".into(),
                BoxSource::Resampled => "resampled".into(),
            },
            self.bounded.to_string(),
            self.good.to_string(),
            format!("{:.17e}", self.estimate),
            format!("{:.17e}", self.threshold),
        ]
    }
}
