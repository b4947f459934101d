//! Direct evaluation of formulas on ultimately periodic words.

use super::formula::Formula;

/// A lasso word: `letters[loopback..]` repeats forever. Each letter is a
/// bitmask of the atoms that hold at that position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LassoWord {
    pub letters: Vec<u64>,
    pub loopback: usize,
}

impl LassoWord {
    pub fn new(stem: &[u64], cycle: &[u64]) -> Self {
        assert!(!cycle.is_empty(), "a lasso needs a nonempty loop");
        let mut letters = stem.to_vec();
        letters.extend_from_slice(cycle);
        LassoWord {
            letters,
            loopback: stem.len(),
        }
    }

    fn succ(&self, i: usize) -> usize {
        if i + 1 == self.letters.len() {
            self.loopback
        } else {
            i + 1
        }
    }

    /// Whether `f` holds at position 0.
    pub fn satisfies(&self, f: &Formula) -> bool {
        self.truth(f)[0]
    }

    /// Truth value of `f` at every position.
    pub fn truth(&self, f: &Formula) -> Vec<bool> {
        let n = self.letters.len();
        match f {
            Formula::True => vec![true; n],
            Formula::False => vec![false; n],
            Formula::Atom(a) => self.letters.iter().map(|l| l >> a & 1 == 1).collect(),
            Formula::Not(a) => self.truth(a).into_iter().map(|b| !b).collect(),
            Formula::And(a, b) => zip(self.truth(a), self.truth(b), |x, y| x && y),
            Formula::Or(a, b) => zip(self.truth(a), self.truth(b), |x, y| x || y),
            Formula::Implies(a, b) => zip(self.truth(a), self.truth(b), |x, y| !x || y),
            Formula::Next(a) => {
                let t = self.truth(a);
                (0..n).map(|i| t[self.succ(i)]).collect()
            }
            Formula::Finally(a) => self.fixpoint(&vec![true; n], &self.truth(a), false),
            Formula::Globally(a) => self.fixpoint(&self.truth(a), &vec![false; n], true),
            Formula::Until(a, b) => self.fixpoint(&self.truth(a), &self.truth(b), false),
            // a R b  ==  b & (a | X (a R b)), greatest fixpoint
            Formula::Release(a, b) => {
                let ta = self.truth(a);
                let tb = self.truth(b);
                let mut s = vec![true; n];
                loop {
                    let mut changed = false;
                    for i in (0..n).rev() {
                        let v = tb[i] && (ta[i] || s[self.succ(i)]);
                        if v != s[i] {
                            s[i] = v;
                            changed = true;
                        }
                    }
                    if !changed {
                        return s;
                    }
                }
            }
        }
    }

    /// `hold U goal` as a least fixpoint, or `G hold` as a greatest one
    /// (`goal` all false) when `greatest` is set.
    fn fixpoint(&self, hold: &[bool], goal: &[bool], greatest: bool) -> Vec<bool> {
        let n = self.letters.len();
        let mut s = vec![greatest; n];
        loop {
            let mut changed = false;
            for i in (0..n).rev() {
                let v = goal[i] || (hold[i] && s[self.succ(i)]);
                if v != s[i] {
                    s[i] = v;
                    changed = true;
                }
            }
            if !changed {
                return s;
            }
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}
