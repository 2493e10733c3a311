//! The four compositional axes, the 256-task enumeration, multi-hot task
//! descriptors and the train/test split generators.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of elements on every axis.
pub const ELEMENTS_PER_AXIS: usize = 4;
/// Total number of tasks in the benchmark.
pub const NUM_TASKS: usize = 256;
/// Length of the multi-hot descriptor.
pub const MULTIHOT_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    Robot,
    Object,
    Obstacle,
    Objective,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Robot, Axis::Object, Axis::Obstacle, Axis::Objective];

    /// Position of the axis in the canonical (robot, object, obstacle, objective) order.
    pub fn position(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Robot => "robot",
            Axis::Object => "object",
            Axis::Obstacle => "obstacle",
            Axis::Objective => "objective",
        }
    }

    /// Canonical element names in index order.
    pub fn element_names(self) -> [&'static str; 4] {
        match self {
            Axis::Robot => ["IIWA", "Jaco", "Gen3", "Panda"],
            Axis::Object => ["Box", "HollowBox", "Plate", "Dumbbell"],
            Axis::Obstacle => ["None", "ObjectDoor", "GoalWall", "ObjectWall"],
            Axis::Objective => ["PickPlace", "Push", "TrashCan", "Shelf"],
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

macro_rules! axis_enum {
    ($name:ident, $axis:expr, [$($variant:ident),+]) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: [$name; 4] = [$($name::$variant),+];

            pub fn index(self) -> usize {
                self as usize
            }

            pub fn from_index(index: usize) -> Option<Self> {
                Self::ALL.get(index).copied()
            }

            pub fn name(self) -> &'static str {
                $axis.element_names()[self.index()]
            }

            pub fn element(self) -> AxisElement {
                AxisElement { axis: $axis, index: self.index() }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

axis_enum!(RobotKind, Axis::Robot, [Iiwa, Jaco, Gen3, Panda]);
axis_enum!(ObjectKind, Axis::Object, [Box, HollowBox, Plate, Dumbbell]);
axis_enum!(ObstacleKind, Axis::Obstacle, [None, ObjectDoor, GoalWall, ObjectWall]);
axis_enum!(ObjectiveKind, Axis::Objective, [PickPlace, Push, TrashCan, Shelf]);

/// One element of one axis, e.g. `(Objective, 0)` for pick-and-place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AxisElement {
    pub axis: Axis,
    pub index: usize,
}

impl AxisElement {
    pub fn new(axis: Axis, index: usize) -> Result<Self> {
        if index >= ELEMENTS_PER_AXIS {
            return Err(Error::InvalidElementIndex { axis, index });
        }
        Ok(Self { axis, index })
    }

    pub fn name(&self) -> &'static str {
        self.axis.element_names()[self.index]
    }

    /// All 16 elements in canonical order.
    pub fn all() -> impl Iterator<Item = AxisElement> {
        Axis::ALL
            .into_iter()
            .flat_map(|axis| (0..ELEMENTS_PER_AXIS).map(move |index| AxisElement { axis, index }))
    }

    /// Comma-separated list of every valid element name, for error messages.
    pub fn valid_names() -> String {
        AxisElement::all().map(|e| e.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for AxisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .flat_map(char::to_lowercase)
        .collect()
}

impl FromStr for AxisElement {
    type Err = Error;

    /// Accepts canonical names ("PickPlace") as well as snake/kebab forms
    /// ("pick_place", "pick-and-place", "no_obstacle", "trash_can").
    fn from_str(s: &str) -> Result<Self> {
        let key = normalize(s);
        let alias = match key.as_str() {
            "pickandplace" => "pickplace",
            "noobstacle" => "none",
            other => other,
        };
        AxisElement::all()
            .find(|e| normalize(e.name()) == alias)
            .ok_or_else(|| Error::UnknownElement {
                name: s.to_string(),
                valid: AxisElement::valid_names(),
            })
    }
}

impl Serialize for AxisElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AxisElement {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A task: one element from each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskDescriptor {
    pub robot: RobotKind,
    pub object: ObjectKind,
    pub obstacle: ObstacleKind,
    pub objective: ObjectiveKind,
}

impl TaskDescriptor {
    pub fn new(robot: RobotKind, object: ObjectKind, obstacle: ObstacleKind, objective: ObjectiveKind) -> Self {
        Self { robot, object, obstacle, objective }
    }

    /// Integer id in `[0, 256)`, lexicographic in (robot, object, obstacle, objective).
    pub fn id(&self) -> usize {
        self.indices().iter().fold(0, |acc, &i| acc * ELEMENTS_PER_AXIS + i)
    }

    pub fn from_id(id: usize) -> Result<Self> {
        if id >= NUM_TASKS {
            return Err(Error::InvalidTaskId(id));
        }
        let mut rest = id;
        let mut idx = [0usize; 4];
        for slot in idx.iter_mut().rev() {
            *slot = rest % ELEMENTS_PER_AXIS;
            rest /= ELEMENTS_PER_AXIS;
        }
        Ok(Self::from_indices(idx))
    }

    fn from_indices(idx: [usize; 4]) -> Self {
        Self {
            robot: RobotKind::ALL[idx[0]],
            object: ObjectKind::ALL[idx[1]],
            obstacle: ObstacleKind::ALL[idx[2]],
            objective: ObjectiveKind::ALL[idx[3]],
        }
    }

    /// Element indices in canonical axis order.
    pub fn indices(&self) -> [usize; 4] {
        [self.robot.index(), self.object.index(), self.obstacle.index(), self.objective.index()]
    }

    pub fn element(&self, axis: Axis) -> AxisElement {
        AxisElement { axis, index: self.indices()[axis.position()] }
    }

    pub fn contains(&self, element: AxisElement) -> bool {
        self.element(element.axis) == element
    }

    /// Copy of this descriptor with one axis replaced.
    pub fn with_element(&self, element: AxisElement) -> Self {
        let mut idx = self.indices();
        idx[element.axis.position()] = element.index;
        Self::from_indices(idx)
    }

    /// Number of axes on which two descriptors differ.
    pub fn hamming(&self, other: &TaskDescriptor) -> usize {
        self.indices().iter().zip(other.indices()).filter(|(a, b)| **a != *b).count()
    }

    /// `Robot_Object_Obstacle_Objective`, e.g. `IIWA_Box_None_PickPlace`.
    pub fn name(&self) -> String {
        format!("{}_{}_{}_{}", self.robot, self.object, self.obstacle, self.objective)
    }
}

impl fmt::Display for TaskDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TaskDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('_').collect();
        if parts.len() != 4 {
            return Err(Error::UnknownTask {
                name: s.to_string(),
                valid: AxisElement::valid_names(),
            });
        }
        let mut idx = [0usize; 4];
        for (axis, part) in Axis::ALL.into_iter().zip(parts) {
            let element: AxisElement = part.parse().map_err(|_| Error::UnknownTask {
                name: s.to_string(),
                valid: AxisElement::valid_names(),
            })?;
            if element.axis != axis {
                return Err(Error::UnknownTask {
                    name: s.to_string(),
                    valid: AxisElement::valid_names(),
                });
            }
            idx[axis.position()] = element.index;
        }
        Ok(Self::from_indices(idx))
    }
}

impl Serialize for TaskDescriptor {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for TaskDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All 256 tasks, ordered by task id.
pub fn enumerate_tasks() -> Vec<TaskDescriptor> {
    (0..NUM_TASKS).map(|id| TaskDescriptor::from_id(id).expect("id in range")).collect()
}

/// Multi-hot descriptor: one 1 in each 4-slot block (robot, object, obstacle, objective).
pub fn encode_multihot(task: &TaskDescriptor) -> [f64; MULTIHOT_LEN] {
    let mut v = [0.0; MULTIHOT_LEN];
    for (block, i) in task.indices().into_iter().enumerate() {
        v[block * ELEMENTS_PER_AXIS + i] = 1.0;
    }
    v
}

pub fn decode_multihot(v: &[f64]) -> Result<TaskDescriptor> {
    if v.len() != MULTIHOT_LEN {
        return Err(Error::MalformedMultihot(format!("expected length 16, got {}", v.len())));
    }
    let mut idx = [0usize; 4];
    for (block, slot) in idx.iter_mut().enumerate() {
        let chunk = &v[block * ELEMENTS_PER_AXIS..(block + 1) * ELEMENTS_PER_AXIS];
        if chunk.iter().any(|&x| x != 0.0 && x != 1.0) {
            return Err(Error::MalformedMultihot(format!("block {block} has non-binary entries")));
        }
        let ones: Vec<usize> = chunk.iter().enumerate().filter(|(_, &x)| x == 1.0).map(|(i, _)| i).collect();
        match ones.as_slice() {
            [i] => *slot = *i,
            _ => {
                return Err(Error::MalformedMultihot(format!(
                    "block {block} has {} ones, expected exactly one",
                    ones.len()
                )))
            }
        }
    }
    Ok(TaskDescriptor::from_indices(idx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Uniform,
    Restricted,
    SmallerScale,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Uniform => "uniform",
            SplitKind::Restricted => "restricted",
            SplitKind::SmallerScale => "smaller_scale",
        })
    }
}

/// Default number of training tasks for a smaller-scale benchmark.
pub const SMALLER_SCALE_DEFAULT_TRAIN: usize = 32;
/// Default number of training tasks for a restricted benchmark (1 restricted + 55 others).
pub const RESTRICTED_DEFAULT_TRAIN: usize = 56;

/// A train/test partition of (a subset of) the task space. Both lists are
/// sorted by task id. Serialized as the split manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSplit {
    pub kind: SplitKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_element: Option<AxisElement>,
    pub train: Vec<TaskDescriptor>,
    pub test: Vec<TaskDescriptor>,
}

impl BenchmarkSplit {
    /// Short identifier used in file names and curve records.
    pub fn id(&self) -> String {
        match self.fixed_element {
            Some(e) => format!("{}-{}-n{}-s{}", self.kind, e.name(), self.train.len(), self.seed),
            None => format!("{}-n{}-s{}", self.kind, self.train.len(), self.seed),
        }
    }

    /// For a restricted split, the single training task containing the fixed element.
    pub fn restricted_train_task(&self) -> Option<TaskDescriptor> {
        let e = self.fixed_element?;
        if self.kind != SplitKind::Restricted {
            return None;
        }
        self.train.iter().copied().find(|t| t.contains(e))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let split: BenchmarkSplit = serde_json::from_str(s)?;
        split.validate()?;
        Ok(split)
    }

    /// Checks the structural invariants of the split kind.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidSplit(msg));
        if self.train.iter().any(|t| self.test.contains(t)) {
            return invalid("train and test overlap".into());
        }
        match (self.kind, self.fixed_element) {
            (SplitKind::Uniform, _) => {
                if self.train.len() + self.test.len() != NUM_TASKS {
                    return invalid("uniform split must cover all 256 tasks".into());
                }
            }
            (SplitKind::SmallerScale, Some(e)) => {
                if self.train.iter().chain(&self.test).any(|t| !t.contains(e))
                    || self.train.len() + self.test.len() != 64
                {
                    return invalid(format!("smaller-scale split must cover exactly the 64 {e} tasks"));
                }
            }
            (SplitKind::Restricted, Some(e)) => {
                if self.train.iter().filter(|t| t.contains(e)).count() != 1 {
                    return invalid(format!("restricted split must train on exactly one {e} task"));
                }
                if self.test.len() != 63 || self.test.iter().any(|t| !t.contains(e)) {
                    return invalid(format!("restricted split must test on the other 63 {e} tasks"));
                }
            }
            (kind, None) => return Err(Error::MissingFixedElement(kind)),
        }
        Ok(())
    }
}

fn sorted(mut tasks: Vec<TaskDescriptor>) -> Vec<TaskDescriptor> {
    tasks.sort();
    tasks
}

/// Builds a train/test split.
///
/// * `Uniform`: `train_count` (required, 1..=255) tasks sampled uniformly; the rest are test.
/// * `SmallerScale(e)`: only the 64 tasks containing `e`; `train_count` (default 32, 1..=63) of them train.
/// * `Restricted(e)`: one uniformly chosen `e` task plus `train_count - 1` (default 55) tasks
///   without `e` train; the remaining 63 `e` tasks are test.
pub fn make_split(
    kind: SplitKind,
    fixed_element: Option<AxisElement>,
    train_count: Option<usize>,
    seed: u64,
) -> Result<BenchmarkSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = enumerate_tasks();
    let (train, test, fixed) = match kind {
        SplitKind::Uniform => {
            let n = train_count.ok_or(Error::InvalidTrainCount { kind, count: 0, max: NUM_TASKS - 1 })?;
            if !(1..NUM_TASKS).contains(&n) {
                return Err(Error::InvalidTrainCount { kind, count: n, max: NUM_TASKS - 1 });
            }
            let picked: Vec<usize> = index::sample(&mut rng, NUM_TASKS, n).into_vec();
            let train: Vec<_> = picked.iter().map(|&i| all[i]).collect();
            let test: Vec<_> = all.iter().copied().filter(|t| !train.contains(t)).collect();
            (train, test, fixed_element)
        }
        SplitKind::SmallerScale => {
            let e = fixed_element.ok_or(Error::MissingFixedElement(kind))?;
            let pool: Vec<_> = all.iter().copied().filter(|t| t.contains(e)).collect();
            let n = train_count.unwrap_or(SMALLER_SCALE_DEFAULT_TRAIN);
            if !(1..pool.len()).contains(&n) {
                return Err(Error::InvalidTrainCount { kind, count: n, max: pool.len() - 1 });
            }
            let picked = index::sample(&mut rng, pool.len(), n).into_vec();
            let train: Vec<_> = picked.iter().map(|&i| pool[i]).collect();
            let test: Vec<_> = pool.iter().copied().filter(|t| !train.contains(t)).collect();
            (train, test, Some(e))
        }
        SplitKind::Restricted => {
            let e = fixed_element.ok_or(Error::MissingFixedElement(kind))?;
            let with: Vec<_> = all.iter().copied().filter(|t| t.contains(e)).collect();
            let without: Vec<_> = all.iter().copied().filter(|t| !t.contains(e)).collect();
            let n = train_count.unwrap_or(RESTRICTED_DEFAULT_TRAIN);
            if !(1..=without.len() + 1).contains(&n) {
                return Err(Error::InvalidTrainCount { kind, count: n, max: without.len() + 1 });
            }
            let chosen = with[index::sample(&mut rng, with.len(), 1).index(0)];
            let mut train = vec![chosen];
            train.extend(index::sample(&mut rng, without.len(), n - 1).iter().map(|i| without[i]));
            let test: Vec<_> = with.iter().copied().filter(|t| *t != chosen).collect();
            (train, test, Some(e))
        }
    };
    Ok(BenchmarkSplit { kind, seed, fixed_element: fixed, train: sorted(train), test: sorted(test) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_endpoints() {
        let tasks = enumerate_tasks();
        assert_eq!(tasks.len(), 256);
        assert_eq!(tasks[0].indices(), [0, 0, 0, 0]);
        assert_eq!(tasks[255].indices(), [3, 3, 3, 3]);
        for (i, t) in tasks.iter().enumerate() {
            assert_eq!(t.id(), i);
        }
    }

    #[test]
    fn multihot_layout() {
        let ones = |t: TaskDescriptor| {
            encode_multihot(&t).iter().enumerate().filter(|(_, &x)| x == 1.0).map(|(i, _)| i).collect::<Vec<_>>()
        };
        assert_eq!(ones(TaskDescriptor::from_id(0).unwrap()), vec![0, 4, 8, 12]);
        let t = TaskDescriptor::new(RobotKind::Panda, ObjectKind::HollowBox, ObstacleKind::GoalWall, ObjectiveKind::PickPlace);
        assert_eq!(ones(t), vec![3, 5, 10, 12]);
    }

    #[test]
    fn multihot_roundtrip_exhaustive() {
        for t in enumerate_tasks() {
            assert_eq!(decode_multihot(&encode_multihot(&t)).unwrap(), t);
        }
    }

    #[test]
    fn decode_rejects_bad_blocks() {
        let mut v = encode_multihot(&TaskDescriptor::from_id(7).unwrap());
        v[1] = 1.0;
        assert!(decode_multihot(&v).is_err());
        let mut v = encode_multihot(&TaskDescriptor::from_id(7).unwrap());
        v[12..16].fill(0.0);
        assert!(decode_multihot(&v).is_err());
        assert!(decode_multihot(&[0.0; 15]).is_err());
        let mut v = encode_multihot(&TaskDescriptor::from_id(7).unwrap());
        v[0] = 0.5;
        assert!(decode_multihot(&v).is_err());
    }

    #[test]
    fn names_parse() {
        let t: TaskDescriptor = "IIWA_Box_None_PickPlace".parse().unwrap();
        assert_eq!(t.id(), 0);
        for t in enumerate_tasks() {
            assert_eq!(t.name().parse::<TaskDescriptor>().unwrap(), t);
        }
        assert!("IIWA_Box_Shelf_PickPlace".parse::<TaskDescriptor>().is_err());
        assert_eq!("pick_place".parse::<AxisElement>().unwrap().name(), "PickPlace");
        assert_eq!("pick-and-place".parse::<AxisElement>().unwrap().name(), "PickPlace");
        assert_eq!("hollow_box".parse::<AxisElement>().unwrap().name(), "HollowBox");
        assert_eq!("no_obstacle".parse::<AxisElement>().unwrap().name(), "None");
        assert_eq!("trash_can".parse::<AxisElement>().unwrap().name(), "TrashCan");
        let err = "teapot".parse::<AxisElement>().unwrap_err().to_string();
        for e in AxisElement::all() {
            assert!(err.contains(e.name()), "{err}");
        }
    }

    #[test]
    fn uniform_split_sizes() {
        let s = make_split(SplitKind::Uniform, None, Some(224), 3).unwrap();
        assert_eq!(s.train.len(), 224);
        assert_eq!(s.test.len(), 32);
        s.validate().unwrap();
        assert!(make_split(SplitKind::Uniform, None, Some(0), 3).is_err());
        assert!(make_split(SplitKind::Uniform, None, Some(256), 3).is_err());
        assert!(make_split(SplitKind::Uniform, None, None, 3).is_err());
    }

    #[test]
    fn fixed_element_required() {
        assert!(matches!(
            make_split(SplitKind::Restricted, None, None, 0),
            Err(Error::MissingFixedElement(SplitKind::Restricted))
        ));
        assert!(make_split(SplitKind::SmallerScale, None, None, 0).is_err());
    }

    #[test]
    fn restricted_pick_place() {
        let e: AxisElement = "PickPlace".parse().unwrap();
        let s = make_split(SplitKind::Restricted, Some(e), None, 11).unwrap();
        assert_eq!(s.train.len(), 56);
        assert_eq!(s.train.iter().filter(|t| t.contains(e)).count(), 1);
        assert!(s.test.iter().all(|t| t.contains(e)));
        assert_eq!(s.test.len(), 63);
        assert!(s.restricted_train_task().is_some());
    }

    #[test]
    fn manifest_json_roundtrip() {
        let e: AxisElement = "IIWA".parse().unwrap();
        let s = make_split(SplitKind::SmallerScale, Some(e), None, 5).unwrap();
        let json = s.to_json().unwrap();
        assert!(json.contains("\"kind\": \"smaller_scale\""));
        assert!(json.contains("\"fixed_element\": \"IIWA\""));
        assert!(json.contains("IIWA_"));
        assert_eq!(BenchmarkSplit::from_json(&json).unwrap(), s);
    }
}
