//! The four-component reward and the step-level validation hooks.
//!
//! `acc` is the exact-match answer indicator, `fmt` the protocol-aware
//! format reward, `sem` asks an answer oracle to recover the ground-truth
//! answer from the perception text alone, and `geo` is the dual-IoU score
//! over the perception's boxes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::geometry::{geo_reward, BoundingBox, BoxError};
use crate::grammar::{format_reward, parse_trajectory, tokenize};
use crate::tree::NodeId;
use crate::BBox;

/// Weights on the fmt/sem/geo components. The accuracy component is
/// always weighted 1. Defaults are 0.5 each; they are workbench choices,
/// not reported values, and are config-overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_fmt: f64,
    pub w_sem: f64,
    pub w_geo: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w_fmt: 0.5,
            w_sem: 0.5,
            w_geo: 0.5,
        }
    }
}

impl RewardWeights {
    pub fn is_valid(&self) -> bool {
        [self.w_fmt, self.w_sem, self.w_geo]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
    }
}

/// Component values plus the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    pub acc: f64,
    pub fmt: f64,
    pub sem: f64,
    pub geo: f64,
    pub total: f64,
}

impl RewardVector {
    pub fn from_components(acc: f64, fmt: f64, sem: f64, geo: f64, w: &RewardWeights) -> Self {
        RewardVector {
            acc,
            fmt,
            sem,
            geo,
            total: acc + w.w_fmt * fmt + w.w_sem * sem + w.w_geo * geo,
        }
    }

    pub fn zero() -> Self {
        RewardVector {
            acc: 0.0,
            fmt: 0.0,
            sem: 0.0,
            geo: 0.0,
            total: 0.0,
        }
    }
}

/// Ground-truth answer and boxes for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub answer: String,
    pub boxes: Vec<BBox>,
}

/// One line of the ground-truth annotation file
/// (`{question, answer, boxes: [[x1,y1,x2,y2], …]}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub boxes: Vec<[f64; 4]>,
}

impl AnnotationRecord {
    pub fn ground_truth(&self) -> Result<GroundTruth, BoxError> {
        let boxes = self
            .boxes
            .iter()
            .map(|b| BoundingBox::new(b[0], b[1], b[2], b[3]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GroundTruth {
            answer: self.answer.clone(),
            boxes,
        })
    }
}

/// Answer normalization behind the exact-match indicator: trim,
/// case-fold, collapse internal whitespace.
pub fn normalize_answer(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Exact-match accuracy indicator.
pub fn acc_reward(answer: &str, gt_answer: &str) -> u8 {
    u8::from(normalize_answer(answer) == normalize_answer(gt_answer))
}

/// The external answerer could not be reached or gave no usable reply.
/// Never silently scored as 0.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("oracle unavailable: {0}")]
pub struct OracleUnavailable(pub String);

/// Produces an answer from perception text and a question. Stands in for
/// re-prompting the generating model, so the suite is model-agnostic.
/// Implementations must be deterministic for a fixed configuration.
pub trait AnswerOracle {
    fn answer(&self, perception: &str, question: &str) -> Result<String, OracleUnavailable>;
}

/// Fixed-reply oracle, mainly for tests and golden fixtures.
#[derive(Debug, Clone)]
pub struct EchoOracle(pub String);

impl AnswerOracle for EchoOracle {
    fn answer(&self, _perception: &str, _question: &str) -> Result<String, OracleUnavailable> {
        Ok(self.0.clone())
    }
}

/// Scripted oracle: a JSON object mapping question text to the reply.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOracle {
    answers: BTreeMap<String, String>,
}

impl ScriptedOracle {
    pub fn new(answers: BTreeMap<String, String>) -> Self {
        ScriptedOracle { answers }
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        Ok(ScriptedOracle {
            answers: serde_json::from_str(json)?,
        })
    }
}

impl AnswerOracle for ScriptedOracle {
    fn answer(&self, _perception: &str, question: &str) -> Result<String, OracleUnavailable> {
        self.answers
            .get(question)
            .cloned()
            .ok_or_else(|| OracleUnavailable(format!("no scripted answer for `{question}`")))
    }
}

/// Key-value oracle over synthetic tasks where sufficiency is decidable
/// by exact lookup: the question `lookup KEY` is answered from a
/// `KEY=VALUE` fact in the perception, or `unknown` when the fact is
/// absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct KvOracle;

impl AnswerOracle for KvOracle {
    fn answer(&self, perception: &str, question: &str) -> Result<String, OracleUnavailable> {
        let key = question.strip_prefix("lookup ").unwrap_or(question).trim();
        for fact in perception.split_whitespace() {
            if let Some((k, v)) = fact.split_once('=') {
                if k == key {
                    return Ok(v.to_string());
                }
            }
        }
        Ok("unknown".to_string())
    }
}

/// Single-endpoint HTTP oracle: posts `{perception, question}` as JSON
/// and reads `{answer}`. Plain `http://` only; any transport or protocol
/// problem surfaces as [`OracleUnavailable`].
#[derive(Debug, Clone)]
pub struct HttpOracle {
    pub endpoint: String,
    pub timeout: Duration,
}

impl HttpOracle {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        HttpOracle {
            endpoint: endpoint.into(),
            timeout,
        }
    }

    fn post(&self, body: &str) -> Result<String, OracleUnavailable> {
        let unavailable = |m: String| OracleUnavailable(m);
        let rest = self
            .endpoint
            .strip_prefix("http://")
            .ok_or_else(|| unavailable(format!("endpoint `{}` must be http://", self.endpoint)))?;
        let (authority, path) = match rest.find('/') {
            Some(i) => (&rest[..i], &rest[i..]),
            None => (rest, "/"),
        };
        let addr = authority
            .to_socket_addrs()
            .map_err(|e| unavailable(format!("resolve {authority}: {e}")))?
            .next()
            .ok_or_else(|| unavailable(format!("no address for {authority}")))?;
        let mut stream = TcpStream::connect_timeout(&addr, self.timeout)
            .map_err(|e| unavailable(format!("connect {authority}: {e}")))?;
        stream.set_read_timeout(Some(self.timeout)).ok();
        stream.set_write_timeout(Some(self.timeout)).ok();
        let request = format!(
            "POST {path} HTTP/1.1\r\nHost: {authority}\r\nContent-Type: application/json\r\n\
             Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        stream
            .write_all(request.as_bytes())
            .map_err(|e| unavailable(format!("write: {e}")))?;
        let mut response = Vec::new();
        stream
            .read_to_end(&mut response)
            .map_err(|e| unavailable(format!("read: {e}")))?;
        let response = String::from_utf8_lossy(&response).into_owned();
        let (head, response_body) = response
            .split_once("\r\n\r\n")
            .ok_or_else(|| unavailable("malformed HTTP response".into()))?;
        let status_line = head.lines().next().unwrap_or_default();
        let ok = status_line.split_whitespace().nth(1) == Some("200");
        if !ok {
            return Err(unavailable(format!("status `{status_line}`")));
        }
        Ok(response_body.to_string())
    }
}

impl AnswerOracle for HttpOracle {
    fn answer(&self, perception: &str, question: &str) -> Result<String, OracleUnavailable> {
        let body =
            serde_json::json!({ "perception": perception, "question": question }).to_string();
        let reply = self.post(&body)?;
        let value: serde_json::Value = serde_json::from_str(reply.trim())
            .map_err(|e| OracleUnavailable(format!("bad reply JSON: {e}")))?;
        value["answer"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| OracleUnavailable("reply missing `answer`".into()))
    }
}

/// Semantic sufficiency indicator: can the oracle recover the
/// ground-truth answer from the perception alone?
pub fn sem_reward(
    perception: &str,
    question: &str,
    gt_answer: &str,
    oracle: &dyn AnswerOracle,
) -> Result<u8, OracleUnavailable> {
    Ok(acc_reward(&oracle.answer(perception, question)?, gt_answer))
}

/// Score one trajectory text end to end.
///
/// Text that does not parse scores all-zero rather than erroring; oracle
/// failures propagate.
pub fn total_reward(
    trajectory_text: &str,
    question: &str,
    gt: &GroundTruth,
    weights: &RewardWeights,
    oracle: &dyn AnswerOracle,
) -> Result<RewardVector, OracleUnavailable> {
    let Ok(doc) = parse_trajectory(&tokenize(trajectory_text)) else {
        return Ok(RewardVector::zero());
    };
    let fmt = f64::from(format_reward(trajectory_text));
    let acc = f64::from(acc_reward(&doc.answer, &gt.answer));
    let sem = f64::from(sem_reward(&doc.perception, question, &gt.answer, oracle)?);
    let geo = geo_reward(&doc.boxes, &gt.boxes);
    Ok(RewardVector::from_components(acc, fmt, sem, geo, weights))
}

/// Validation thresholds; `theta_sem = 1.0` makes the semantic check
/// binary, `theta_geo = 0.5` is the conventional detection IoU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub theta_sem: f64,
    pub theta_geo: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            theta_sem: 1.0,
            theta_geo: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    Logical,
    Semantic,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepVerdict {
    Pass,
    Fail(FailReason),
}

impl StepVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, StepVerdict::Pass)
    }
}

/// Raw scores a validator attaches to a proposed step before thresholds
/// are applied. `geo_score` is `None` when no geometry is attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAssessment {
    pub coherent: bool,
    pub semantic_score: f64,
    pub geo_score: Option<f64>,
}

impl StepAssessment {
    pub fn pass() -> Self {
        StepAssessment {
            coherent: true,
            semantic_score: 1.0,
            geo_score: None,
        }
    }
}

/// Pluggable judge of a step's validity given the active path. The search
/// engine consults it for every proposed step and for termination.
pub trait StepValidator {
    fn assess_step(&self, path: &[(NodeId, &str)], proposal: &str) -> StepAssessment;
    fn assess_finish(&self, path: &[(NodeId, &str)]) -> StepAssessment;
}

/// Apply thresholds to a validator's assessment of one proposed step.
/// The first violated criterion (logical, semantic, geometric) is
/// reported.
pub fn validate_step(
    path: &[(NodeId, &str)],
    proposal: &str,
    thresholds: &Thresholds,
    validator: &dyn StepValidator,
) -> StepVerdict {
    apply_thresholds(&validator.assess_step(path, proposal), thresholds)
}

pub(crate) fn apply_thresholds(a: &StepAssessment, th: &Thresholds) -> StepVerdict {
    if !a.coherent {
        StepVerdict::Fail(FailReason::Logical)
    } else if a.semantic_score < th.theta_sem {
        StepVerdict::Fail(FailReason::Semantic)
    } else if a.geo_score.is_some_and(|g| g < th.theta_geo) {
        StepVerdict::Fail(FailReason::Geometric)
    } else {
        StepVerdict::Pass
    }
}
