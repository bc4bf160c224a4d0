use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mp::{MotionPrimitive, Tool, Verb, IDLE};
use super::{read_text, DatasetError, Result};

/// Label granularity of a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    #[default]
    Gesture,
    Mp,
    MpLeft,
    MpRight,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [
        Granularity::Gesture,
        Granularity::Mp,
        Granularity::MpLeft,
        Granularity::MpRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Gesture => "gesture",
            Granularity::Mp => "mp",
            Granularity::MpLeft => "mp-left",
            Granularity::MpRight => "mp-right",
        }
    }

    /// Column heading used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Granularity::Gesture => "Gestures",
            Granularity::Mp => "MPs",
            Granularity::MpLeft => "Left MPs",
            Granularity::MpRight => "Right MPs",
        }
    }

    pub fn is_motion_primitive(self) -> bool {
        self != Granularity::Gesture
    }

    pub fn is_single_arm(self) -> bool {
        matches!(self, Granularity::MpLeft | Granularity::MpRight)
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Granularity::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| format!("unknown granularity {s:?} (expected gesture, mp, mp-left, mp-right)"))
    }
}

/// Ordered class list. Motion-primitive vocabularies are verb level: a label
/// such as `Grasp(L,Needle)` maps to the class `Grasp`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    labels: Vec<String>,
    verb_level: bool,
}

impl Vocabulary {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Vocabulary {
            labels: labels.into_iter().map(Into::into).collect(),
            verb_level: false,
        }
    }

    /// The closed verb set, Idle included.
    pub fn verbs() -> Self {
        Vocabulary {
            labels: Verb::ALL.iter().map(|v| v.name().to_string()).collect(),
            verb_level: true,
        }
    }

    pub fn for_granularity(granularity: Granularity, gestures: &[String]) -> Self {
        if granularity.is_motion_primitive() {
            Vocabulary::verbs()
        } else {
            Vocabulary::new(gestures.iter().cloned())
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_verb_level(&self) -> bool {
        self.verb_level
    }

    pub fn class_of(&self, label: &str) -> Option<usize> {
        if self.verb_level {
            let verb = MotionPrimitive::parse(label).ok()?.verb;
            self.labels.iter().position(|l| l == verb.name())
        } else {
            self.labels.iter().position(|l| l == label)
        }
    }
}

/// Inclusive frame range carrying one label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl Segment {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        Segment {
            start,
            end,
            label: label.into(),
        }
    }

    pub fn duration(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Validated segment list over a trial of `length` frames.
///
/// Segments are sorted by start. They may overlap only at `mp` granularity,
/// where both arms can act at once; per-arm transcripts tile every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTranscript {
    granularity: Granularity,
    vocabulary: Vocabulary,
    segments: Vec<Segment>,
    length: usize,
}

impl LabelTranscript {
    pub fn new(
        granularity: Granularity,
        vocabulary: Vocabulary,
        segments: Vec<Segment>,
        length: usize,
    ) -> Result<Self> {
        let mut prev: Option<&Segment> = None;
        for seg in &segments {
            if seg.start > seg.end {
                return Err(DatasetError::InvalidSegment {
                    start: seg.start,
                    end: seg.end,
                });
            }
            if seg.end >= length {
                return Err(DatasetError::SegmentBeyondTrial { end: seg.end, length });
            }
            if vocabulary.class_of(&seg.label).is_none() {
                return Err(DatasetError::UnknownLabel(seg.label.clone()));
            }
            if let Some(p) = prev {
                if seg.start < p.start {
                    return Err(DatasetError::OutOfOrderSegments {
                        start: seg.start,
                        previous_start: p.start,
                    });
                }
                if granularity != Granularity::Mp && seg.start <= p.end {
                    return Err(DatasetError::OverlappingSegments {
                        start: seg.start,
                        previous_end: p.end,
                    });
                }
            }
            prev = Some(seg);
        }
        if granularity.is_single_arm() {
            let mut next = 0;
            for seg in &segments {
                if seg.start != next {
                    return Err(DatasetError::NotTiled(next));
                }
                next = seg.end + 1;
            }
            if next != length {
                return Err(DatasetError::NotTiled(next));
            }
        }
        Ok(LabelTranscript {
            granularity,
            vocabulary,
            segments,
            length,
        })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// First and last labeled frame, if any.
    pub fn labeled_span(&self) -> Option<(usize, usize)> {
        let first = self.segments.iter().map(|s| s.start).min()?;
        let last = self.segments.iter().map(|s| s.end).max()?;
        Some((first, last))
    }

    /// Per-frame class ids; see [`densify`].
    pub fn dense_classes(&self, fill: Option<&str>) -> Result<Vec<usize>> {
        densify(self, fill)?
            .into_iter()
            .map(|l| {
                self.vocabulary
                    .class_of(l)
                    .ok_or_else(|| DatasetError::UnknownLabel(l.to_string()))
            })
            .collect()
    }

    /// Restricts the transcript to frames `start..=end`, re-indexed from 0.
    pub fn crop(&self, start: usize, end: usize) -> Result<LabelTranscript> {
        let segments = self
            .segments
            .iter()
            .filter(|s| s.end >= start && s.start <= end)
            .map(|s| Segment::new(s.start.max(start) - start, s.end.min(end) - start, s.label.clone()))
            .collect();
        LabelTranscript::new(self.granularity, self.vocabulary.clone(), segments, end - start + 1)
    }
}

/// Per-frame labels. Frames covered by several segments take the label of
/// the earliest-starting one; uncovered frames take `fill`.
pub fn densify<'a>(transcript: &'a LabelTranscript, fill: Option<&'a str>) -> Result<Vec<&'a str>> {
    let mut out: Vec<Option<&str>> = vec![None; transcript.length];
    for seg in &transcript.segments {
        for slot in &mut out[seg.start..=seg.end] {
            if slot.is_none() {
                *slot = Some(seg.label.as_str());
            }
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(t, l)| l.or(fill).ok_or(DatasetError::GapWithoutFill(t)))
        .collect()
}

/// Run-length segmentation of a per-frame label sequence.
pub fn resegment<S: AsRef<str>>(labels: &[S]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (t, l) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(seg) if seg.label == l.as_ref() => seg.end = t,
            _ => out.push(Segment::new(t, t, l.as_ref())),
        }
    }
    out
}

/// Parses `start end label` records.
pub fn parse_transcript(
    text: &str,
    granularity: Granularity,
    vocabulary: &Vocabulary,
    trial_length: usize,
) -> Result<LabelTranscript> {
    let mut segments = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = || DatasetError::MalformedRecord {
            line: i + 1,
            record: line.to_string(),
        };
        let mut parts = line.splitn(3, char::is_whitespace);
        let start = parts.next().and_then(|s| s.parse().ok()).ok_or_else(malformed)?;
        let end = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(malformed)?;
        let label = parts
            .next()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .ok_or_else(malformed)?;
        segments.push(Segment::new(start, end, label));
    }
    if granularity.is_single_arm() {
        segments = fill_and_merge(segments, trial_length);
    }
    LabelTranscript::new(granularity, vocabulary.clone(), segments, trial_length)
}

pub fn load_transcript(
    path: &Path,
    granularity: Granularity,
    vocabulary: &Vocabulary,
    trial_length: usize,
) -> Result<LabelTranscript> {
    parse_transcript(&read_text(path)?, granularity, vocabulary, trial_length)
}

/// Fills gaps in a sorted, non-overlapping segment list with Idle and merges
/// adjacent segments carrying the same label.
fn fill_and_merge(segments: Vec<Segment>, length: usize) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len() * 2 + 1);
    let push = |seg: Segment, out: &mut Vec<Segment>| match out.last_mut() {
        Some(last) if last.label == seg.label && last.end + 1 == seg.start => last.end = seg.end,
        _ => out.push(seg),
    };
    let mut next = 0;
    for seg in segments {
        if seg.start > next {
            push(Segment::new(next, seg.start - 1, IDLE), &mut out);
        }
        next = next.max(seg.end + 1);
        push(seg, &mut out);
    }
    if next < length {
        push(Segment::new(next, length - 1, IDLE), &mut out);
    }
    out
}

/// Splits a two-arm motion-primitive transcript into left and right
/// transcripts, each tiled to `[0, length)` with Idle.
pub fn split_by_arm(transcript: &LabelTranscript, length: usize) -> Result<(LabelTranscript, LabelTranscript)> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for seg in transcript.segments() {
        if seg.end >= length {
            return Err(DatasetError::SegmentBeyondTrial { end: seg.end, length });
        }
        let mp = MotionPrimitive::parse(&seg.label)?;
        if mp.is_idle() {
            continue;
        }
        match mp.tool {
            Tool::Left => left.push(seg.clone()),
            Tool::Right => right.push(seg.clone()),
            Tool::None => return Err(DatasetError::UnattributedSegment(seg.label.clone())),
        }
    }
    let build = |segs: Vec<Segment>, g: Granularity| -> Result<LabelTranscript> {
        for pair in segs.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(DatasetError::OverlappingSegments {
                    start: pair[1].start,
                    previous_end: pair[0].end,
                });
            }
        }
        LabelTranscript::new(g, Vocabulary::verbs(), fill_and_merge(segs, length), length)
    };
    Ok((build(left, Granularity::MpLeft)?, build(right, Granularity::MpRight)?))
}
