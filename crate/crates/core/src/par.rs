//! Data-parallel helpers. With the `parallel` feature these dispatch to rayon,
//! otherwise they run sequentially. Output order always matches input order.

/// How a batch of independent jobs is executed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `Parallel` when the crate was built with the `parallel` feature.
    pub fn available() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

thread_local! {
    static OVERRIDE: std::cell::Cell<Option<Execution>> = const { std::cell::Cell::new(None) };
}

/// Execution used by [`map`] on this thread.
pub fn current() -> Execution {
    OVERRIDE.with(|o| o.get()).unwrap_or_else(Execution::available)
}

/// Runs `f` with [`map`] forced to `exec` on the calling thread.
pub fn with_execution<R>(exec: Execution, f: impl FnOnce() -> R) -> R {
    let prev = OVERRIDE.with(|o| o.replace(Some(exec)));
    let out = f();
    OVERRIDE.with(|o| o.set(prev));
    out
}

/// Maps `f` over `items` using the thread's current execution.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_with(current(), items, f)
}

pub fn map_with<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Like [`map`] but over mutable references.
pub fn for_each_mut<T, F>(exec: Execution, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter_mut().for_each(f)
        }
        _ => items.iter_mut().for_each(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let xs: Vec<u32> = (0..1000).collect();
        let a = map_with(Execution::Sequential, &xs, |x| x * 2);
        let b = map_with(Execution::Parallel, &xs, |x| x * 2);
        assert_eq!(a, b);
        assert_eq!(a[999], 1998);
    }

    #[test]
    fn override_is_scoped() {
        let inner = with_execution(Execution::Sequential, current);
        assert_eq!(inner, Execution::Sequential);
        assert_eq!(current(), Execution::available());
    }
}
