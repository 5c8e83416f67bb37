/// Union of half-open intervals kept as a sorted list of disjoint pieces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
    length: f64,
}

impl IntervalUnion {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `[start, end)`; empty intervals are ignored. Touching pieces merge.
    pub fn insert(&mut self, start: f64, end: f64) {
        if start.partial_cmp(&end) != Some(std::cmp::Ordering::Less) {
            return;
        }
        let lo = self.intervals.partition_point(|iv| iv.1 < start);
        let hi = self.intervals.partition_point(|iv| iv.0 <= end);
        let (mut s, mut e) = (start, end);
        if lo < hi {
            s = s.min(self.intervals[lo].0);
            e = e.max(self.intervals[hi - 1].1);
        }
        self.intervals.splice(lo..hi, [(s, e)]);
        self.length = self.intervals.iter().map(|(a, b)| b - a).sum();
        debug_assert!(self.is_canonical());
    }

    pub fn len(&self) -> f64 {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    fn is_canonical(&self) -> bool {
        self.intervals.iter().all(|(a, b)| a < b)
            && self.intervals.windows(2).all(|w| w[0].1 < w[1].0)
    }
}
