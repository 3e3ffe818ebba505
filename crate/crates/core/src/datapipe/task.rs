use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::idx::load_idx;
use super::image::ImageSample;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mnist,
    Fashion,
}

impl DatasetKind {
    fn prefix(self) -> char {
        match self {
            DatasetKind::Mnist => 'm',
            DatasetKind::Fashion => 'f',
        }
    }

    fn dir_name(self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::Fashion => "fashion",
        }
    }
}

/// A binary task named like `m01` (MNIST digits 0 vs 1) or `f23` (Fashion classes 2 vs 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TaskId {
    pub dataset: DatasetKind,
    pub class_a: usize,
    pub class_b: usize,
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.dataset.prefix(), self.class_a, self.class_b)
    }
}

impl FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("task name `{s}` is not like m01 or f23"));
        let mut chars = s.chars();
        let dataset = match chars.next() {
            Some('m') => DatasetKind::Mnist,
            Some('f') => DatasetKind::Fashion,
            _ => return Err(bad()),
        };
        let digits: Vec<usize> = chars
            .map(|c| c.to_digit(10).map(|d| d as usize))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        match digits[..] {
            [a, b] if a != b => Ok(Self {
                dataset,
                class_a: a,
                class_b: b,
            }),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for TaskId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TaskId> for String {
    fn from(t: TaskId) -> String {
        t.to_string()
    }
}

/// Train and test pools of one IDX dataset.
#[derive(Debug, Clone)]
pub struct DatasetSplits {
    pub kind: DatasetKind,
    pub train: Vec<ImageSample>,
    pub test: Vec<ImageSample>,
}

fn resolve(dir: &Path, stem: &str) -> Result<PathBuf> {
    let plain = dir.join(stem);
    let gz = dir.join(format!("{stem}.gz"));
    if gz.exists() {
        Ok(gz)
    } else if plain.exists() {
        Ok(plain)
    } else {
        Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} (or .gz) not found", plain.display()),
        )))
    }
}

impl DatasetSplits {
    /// Loads `<root>/<mnist|fashion>/{train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz]`.
    pub fn load(root: impl AsRef<Path>, kind: DatasetKind) -> Result<Self> {
        let dir = root.as_ref().join(kind.dir_name());
        let split = |prefix: &str| -> Result<Vec<ImageSample>> {
            load_idx(
                resolve(&dir, &format!("{prefix}-images-idx3-ubyte"))?,
                resolve(&dir, &format!("{prefix}-labels-idx1-ubyte"))?,
            )
        };
        Ok(Self {
            kind,
            train: split("train")?,
            test: split("t10k")?,
        })
    }
}

/// Sizes of the three disjoint pools drawn for a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSizes {
    /// Victim training images.
    pub train: usize,
    /// Held-out evaluation images.
    pub test: usize,
    /// Unlabeled images available to the attacker for querying.
    pub public: usize,
}

impl TaskSizes {
    pub const FULL: TaskSizes = TaskSizes {
        train: 3000,
        test: 1000,
        public: 200,
    };
    pub const DESK: TaskSizes = TaskSizes {
        train: 600,
        test: 200,
        public: 200,
    };
}

/// Binary classification task with labels remapped to {0, 1} (`class_a → 0`).
#[derive(Debug, Clone)]
pub struct BinaryTask {
    pub id: TaskId,
    pub train: Vec<ImageSample>,
    pub test: Vec<ImageSample>,
    pub public: Vec<ImageSample>,
}

impl BinaryTask {
    pub fn name(&self) -> String {
        self.id.to_string()
    }

    /// Draws the task's pools. Victim-train and public images come from the
    /// dataset's training file, test images from its test file.
    pub fn build(id: TaskId, data: &DatasetSplits, sizes: TaskSizes, seed: u64) -> Result<Self> {
        if data.kind != id.dataset {
            return Err(Error::Argument(format!("task {id} needs the {:?} dataset", id.dataset)));
        }
        let pick = |pool: &[ImageSample], which: u64| -> Vec<ImageSample> {
            let mut out: Vec<ImageSample> = pool
                .iter()
                .filter_map(|s| {
                    let remapped = match s.label {
                        Some(l) if l == id.class_a => 0,
                        Some(l) if l == id.class_b => 1,
                        _ => return None,
                    };
                    let mut s = s.clone();
                    s.label = Some(remapped);
                    Some(s)
                })
                .collect();
            out.shuffle(&mut rng::stream(seed, &[rng::tag("task-split"), rng::tag(&id.to_string()), which]));
            out
        };
        let mut train = pick(&data.train, 0);
        let mut test = pick(&data.test, 1);
        if train.len() < sizes.train + sizes.public {
            return Err(Error::Argument(format!(
                "task {id}: {} training images available, {} requested",
                train.len(),
                sizes.train + sizes.public
            )));
        }
        if test.len() < sizes.test {
            return Err(Error::Argument(format!(
                "task {id}: {} test images available, {} requested",
                test.len(),
                sizes.test
            )));
        }
        let public = train.split_off(sizes.train);
        let public = public.into_iter().take(sizes.public).collect();
        test.truncate(sizes.test);
        Ok(Self {
            id,
            train,
            test,
            public,
        })
    }
}

/// Task-level config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub dataset: DatasetKind,
    pub class_a: usize,
    pub class_b: usize,
    pub train_size: usize,
    pub test_size: usize,
    #[serde(default = "default_public")]
    pub public_size: usize,
}

fn default_public() -> usize {
    TaskSizes::DESK.public
}

impl TaskConfig {
    pub fn id(&self) -> TaskId {
        TaskId {
            dataset: self.dataset,
            class_a: self.class_a,
            class_b: self.class_b,
        }
    }

    pub fn sizes(&self) -> TaskSizes {
        TaskSizes {
            train: self.train_size,
            test: self.test_size,
            public: self.public_size,
        }
    }
}
