//! Data-parallel helpers. With the `parallel` feature the `Parallel`
//! strategy runs on rayon's global pool; without it every strategy runs
//! sequentially. All reductions used by callers are exact and commutative,
//! so results do not depend on the strategy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

pub fn map_collect<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Fold each chunk from `identity`, then combine partial results with `reduce`.
pub fn fold_reduce<T, A, I, F, R>(exec: Exec, items: &[T], identity: I, fold: F, reduce: R) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, &T) -> A + Sync + Send,
    R: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().fold(&identity, &fold).reduce(&identity, &reduce);
    }
    let _ = (exec, &reduce);
    items.iter().fold(identity(), fold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let xs: Vec<u64> = (1..=1000).collect();
        for exec in [Exec::Sequential, Exec::Parallel] {
            let s = fold_reduce(exec, &xs, || 0u64, |a, x| a + x * x, |a, b| a + b);
            assert_eq!(s, 333_833_500);
            assert_eq!(map_collect(exec, &xs[..3], |x| x + 1), vec![2, 3, 4]);
        }
    }
}
