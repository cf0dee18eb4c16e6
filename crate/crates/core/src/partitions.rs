//! Set partitions of the mode labels `0..N`, Young classes and target sets.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_MODES: usize = 8;

/// A set partition in canonical form: blocks sorted internally and ordered
/// by their smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || n > MAX_MODES {
            return Err(Error::InvalidPartition(format!("mode count {n} outside 1..={MAX_MODES}")));
        }
        let mut seen = vec![false; n];
        let mut blocks: Vec<Vec<usize>> = blocks.into_iter().filter(|b| !b.is_empty()).collect();
        for b in &mut blocks {
            b.sort_unstable();
            for &m in b.iter() {
                if m >= n {
                    return Err(Error::InvalidPartition(format!("mode {m} out of range for {n} modes")));
                }
                if std::mem::replace(&mut seen[m], true) {
                    return Err(Error::InvalidPartition(format!("mode {m} appears twice")));
                }
            }
        }
        if let Some(m) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("mode {m} is not covered")));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { n, blocks })
    }

    /// Build from a restricted growth string (`labels[i]` is the block of mode `i`).
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (mode, &l) in labels.iter().enumerate() {
            blocks[l].push(mode);
        }
        Self::new(labels.len(), blocks)
    }

    pub fn singletons(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|m| vec![m]).collect())
    }

    pub fn num_modes(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, mode: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(&mode)).expect("partition covers every mode")
    }

    pub fn labels(&self) -> Vec<usize> {
        (0..self.n).map(|m| self.block_of(m)).collect()
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.block_of(a) == self.block_of(b)
    }

    /// Every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.n == coarser.n && self.blocks.iter().all(|b| b.iter().all(|&m| coarser.same_block(b[0], m)))
    }

    /// Some block of `self` is cut by `other`.
    pub fn is_split_by(&self, other: &Partition) -> bool {
        !self.refines(other)
    }

    pub fn young_class(&self) -> YoungClass {
        let mut sizes: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        YoungClass(sizes)
    }

    /// Every bipartition that separates at least one pair of modes sharing a block.
    pub fn splitting_bipartitions(&self) -> Vec<Partition> {
        bipartitions(self.n).into_iter().filter(|b| self.is_split_by(b)).collect()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (j, m) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{m}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.blocks.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let blocks = Vec::<Vec<usize>>::deserialize(d)?;
        let n = blocks.iter().map(Vec::len).sum();
        Partition::new(n, blocks).map_err(serde::de::Error::custom)
    }
}

/// Block sizes in non-increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YoungClass(pub Vec<usize>);

impl YoungClass {
    pub fn num_modes(&self) -> usize {
        self.0.iter().sum()
    }

    /// The partition whose blocks are consecutive runs of modes with these sizes.
    pub fn representative(&self) -> Result<Partition> {
        let mut next = 0;
        let blocks = self
            .0
            .iter()
            .map(|&s| {
                let b: Vec<usize> = (next..next + s).collect();
                next += s;
                b
            })
            .collect();
        Partition::new(next, blocks)
    }

    pub fn is_fully_separable(&self) -> bool {
        self.0.iter().all(|&s| s == 1)
    }
}

impl fmt::Display for YoungClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All set partitions of `0..n` in restricted-growth-string order.
pub fn enumerate_partitions(n: usize) -> Result<Vec<Partition>> {
    if n == 0 || n > MAX_MODES {
        return Err(Error::InvalidPartition(format!("mode count {n} outside 1..={MAX_MODES}")));
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if i == labels.len() {
            out.push(Partition::from_labels(labels).expect("restricted growth string is a partition"));
            return;
        }
        for l in 0..=max + 1 {
            labels[i] = l;
            rec(i + 1, max.max(l), labels, out);
        }
    }
    if n == 1 {
        out.push(Partition::from_labels(&labels)?);
    } else {
        rec(1, 0, &mut labels, &mut out);
    }
    Ok(out)
}

/// All two-block partitions of `0..n`.
pub fn bipartitions(n: usize) -> Vec<Partition> {
    if !(2..=MAX_MODES).contains(&n) {
        return Vec::new();
    }
    // Mode 0 always sits in the first block; enumerate the rest of that block.
    (0u32..(1 << (n - 1)) - 1)
        .map(|mask| {
            let labels: Vec<usize> =
                (0..n).map(|m| if m == 0 { 0 } else { usize::from(mask >> (m - 1) & 1 == 0) }).collect();
            Partition::from_labels(&labels).expect("two-block labelling")
        })
        .collect()
}

/// How the target set of a structure is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Bipartitions that cut some block of the structure.
    #[default]
    BipartitionsSplitting,
    /// Every partition (any block count) that cuts some block.
    AllSplitting,
}

pub fn target_partitions(structure: &Partition, mode: TargetMode) -> Result<Vec<Partition>> {
    Ok(match mode {
        TargetMode::BipartitionsSplitting => structure.splitting_bipartitions(),
        TargetMode::AllSplitting => {
            enumerate_partitions(structure.num_modes())?.into_iter().filter(|p| structure.is_split_by(p)).collect()
        }
    })
}

/// Distinct Young classes of `n`, largest first.
pub fn young_classes(n: usize) -> Vec<YoungClass> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<YoungClass>) {
        if rest == 0 {
            out.push(YoungClass(cur.clone()));
            return;
        }
        for s in (1..=rest.min(max)).rev() {
            cur.push(s);
            rec(rest - s, s, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BELL: [usize; 9] = [1, 1, 2, 5, 15, 52, 203, 877, 4140];

    #[test]
    fn partition_counts_are_bell_numbers() {
        for (n, &count) in BELL.iter().enumerate().take(MAX_MODES + 1).skip(1) {
            let all = enumerate_partitions(n).unwrap();
            assert_eq!(all.len(), count, "n={n}");
            let mut dedup = all.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), all.len());
        }
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(9).is_err());
    }

    #[test]
    fn bipartition_counts() {
        for n in 2..=MAX_MODES {
            assert_eq!(bipartitions(n).len(), (1 << (n - 1)) - 1);
            assert!(bipartitions(n).iter().all(|b| b.num_blocks() == 2));
        }
        assert!(bipartitions(1).is_empty());
    }

    #[test]
    fn canonical_form() {
        let p = Partition::new(4, vec![vec![3], vec![2, 0], vec![1]]).unwrap();
        assert_eq!(p.to_string(), "[[0,2],[1],[3]]");
        assert_eq!(p.young_class(), YoungClass(vec![2, 1, 1]));
        assert_eq!(p.labels(), vec![0, 1, 0, 2]);
        assert!(Partition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(2, vec![vec![0, 2]]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = Partition::new(4, vec![vec![0, 1], vec![2], vec![3]]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[0,1],[2],[3]]");
        assert_eq!(serde_json::from_str::<Partition>(&s).unwrap(), p);
        assert!(serde_json::from_str::<Partition>("[[0,0]]").is_err());
    }

    #[test]
    fn splitting_targets() {
        // Structure [[0,1],[2]] is cut by {0|12} and {02|1} but not by {01|2}.
        let s = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let t = target_partitions(&s, TargetMode::BipartitionsSplitting).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|b| !b.same_block(0, 1)));
        // Fully separable structure has no targets; genuine N-partite has all bipartitions.
        assert!(target_partitions(&Partition::singletons(4).unwrap(), TargetMode::default()).unwrap().is_empty());
        let whole = Partition::new(4, vec![vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(target_partitions(&whole, TargetMode::default()).unwrap().len(), 7);
        assert_eq!(target_partitions(&whole, TargetMode::AllSplitting).unwrap().len(), 14);
    }

    #[test]
    fn young_class_enumeration() {
        assert_eq!(young_classes(4).len(), 5);
        assert_eq!(young_classes(4)[0], YoungClass(vec![4]));
        assert!(young_classes(4)[4].is_fully_separable());
        let rep = YoungClass(vec![2, 1, 1]).representative().unwrap();
        assert_eq!(rep.to_string(), "[[0,1],[2],[3]]");
        assert_eq!(YoungClass(vec![2, 2]).to_string(), "(2,2)");
    }

    #[test]
    fn refinement() {
        let fine = Partition::new(4, vec![vec![0], vec![1], vec![2, 3]]).unwrap();
        let coarse = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(coarse.is_split_by(&fine));
    }
}
