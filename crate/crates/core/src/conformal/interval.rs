use alloc::vec::Vec;
use core::fmt;

/// Closed interval `[lo, hi]` with `lo ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval bounds out of order: [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// `[lo, hi]` if nonempty.
    pub fn checked(lo: f64, hi: f64) -> Option<Self> {
        (lo <= hi).then_some(Self { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::checked(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Finite union of closed intervals, kept sorted with overlapping or
/// touching pieces merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(iv: Interval) -> Self {
        Self { intervals: alloc::vec![iv] }
    }

    /// Normalizes an arbitrary collection of intervals.
    pub fn from_intervals(mut pieces: Vec<Interval>) -> Self {
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut out: Vec<Interval> = Vec::with_capacity(pieces.len());
        for iv in pieces {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => out.push(iv),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn contains(&self, z: f64) -> bool {
        let k = self.intervals.partition_point(|iv| iv.hi < z);
        self.intervals.get(k).is_some_and(|iv| iv.contains(z))
    }

    /// Smallest interval containing the union.
    pub fn hull(&self) -> Option<Interval> {
        Some(Interval::new(self.intervals.first()?.lo, self.intervals.last()?.hi))
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::from_intervals(all)
    }

    pub fn intersection(&self, other: &IntervalUnion) -> IntervalUnion {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(iv) = a[i].intersect(&b[j]) {
                out.push(iv);
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }

    pub fn clip(&self, lo: f64, hi: f64) -> IntervalUnion {
        match Interval::checked(lo, hi) {
            Some(window) => self.intersection(&IntervalUnion::single(window)),
            None => IntervalUnion::empty(),
        }
    }

    /// Exact set inclusion: every interval of `self` lies inside one
    /// interval of `other`.
    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.intervals.iter().all(|iv| {
            let k = other.intervals.partition_point(|o| o.hi < iv.hi);
            other.intervals.get(k).is_some_and(|o| o.lo <= iv.lo && iv.hi <= o.hi)
        })
    }

    /// Lebesgue measure of the symmetric difference.
    pub fn symmetric_difference_length(&self, other: &IntervalUnion) -> f64 {
        let both = self.intersection(other).total_length();
        (self.total_length() - both) + (other.total_length() - both)
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}
