//! The shared parameter store all workers read from and write to.

use super::TrainError;
use crate::net::{rmsprop_step, GradientVector, ParamVector, RmsPropState};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// Shared trainable parameters, shared RMSProp statistics, and the global
/// environment-step counter.
///
/// Updates are coarse-atomic: one whole gradient is folded in under the lock,
/// so snapshots observe a prefix of applied updates and never a torn
/// coordinate. The step counter is independent of the lock.
pub struct ParameterStore {
    inner: Mutex<Inner>,
    global_step: AtomicU64,
}

struct Inner {
    params: ParamVector,
    opt: RmsPropState,
}

impl ParameterStore {
    pub fn new(params: ParamVector) -> Self {
        let opt = RmsPropState::new(params.len());
        ParameterStore {
            inner: Mutex::new(Inner { params, opt }),
            global_step: AtomicU64::new(0),
        }
    }

    pub fn with_optimizer(params: ParamVector, opt: RmsPropState) -> Self {
        ParameterStore {
            inner: Mutex::new(Inner { params, opt }),
            global_step: AtomicU64::new(0),
        }
    }

    pub fn global_step(&self) -> u64 {
        self.global_step.load(Ordering::SeqCst)
    }

    /// Account `n` fresh environment steps; returns the new total.
    pub fn advance_steps(&self, n: u64) -> u64 {
        self.global_step.fetch_add(n, Ordering::SeqCst) + n
    }

    /// Copy of the current parameters.
    pub fn snapshot(&self) -> ParamVector {
        self.inner.lock().expect("store lock").params.clone()
    }

    /// Apply one RMSProp update with the shared accumulators.
    ///
    /// Non-finite gradients are rejected without touching the store
    /// (returns `Ok(false)`). A non-finite parameter after an accepted
    /// update is a hard error; rejection plus clipping should make it
    /// unreachable.
    pub fn apply_rmsprop(&self, grad: &GradientVector, lr: f64) -> Result<bool, TrainError> {
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(TrainError::BadLearningRate(lr));
        }
        if !grad.is_finite() {
            return Ok(false);
        }
        let mut inner = self.inner.lock().expect("store lock");
        let inner = &mut *inner;
        rmsprop_step(inner.params.as_mut_slice(), &mut inner.opt, grad.as_slice(), lr);
        if inner.params.as_slice().iter().any(|p| !p.is_finite()) {
            return Err(TrainError::NonFiniteParameters);
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{init_params, NetworkSpec, ParamLayout};

    fn small_store() -> ParameterStore {
        let spec = NetworkSpec::new(3, 2).with_hidden(vec![4]);
        ParameterStore::new(init_params(&spec, 8).unwrap())
    }

    #[test]
    fn nonfinite_gradient_rejected_without_mutation() {
        let store = small_store();
        let before = store.snapshot();
        let mut grad = GradientVector::zeros(before.layout().clone());
        grad.as_mut_slice()[0] = f64::NAN;
        assert!(!store.apply_rmsprop(&grad, 1e-3).unwrap());
        assert_eq!(store.snapshot().as_slice(), before.as_slice());
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let store = small_store();
        let before = store.snapshot();
        let mut grad = GradientVector::zeros(before.layout().clone());
        for g in grad.as_mut_slice() {
            *g = 0.7;
        }
        assert!(store.apply_rmsprop(&grad, 0.0).unwrap());
        assert_eq!(store.snapshot().as_slice(), before.as_slice());
    }

    #[test]
    fn step_counter_accumulates() {
        let store = small_store();
        assert_eq!(store.advance_steps(20), 20);
        assert_eq!(store.advance_steps(13), 33);
        assert_eq!(store.global_step(), 33);
    }

    #[test]
    fn concurrent_applies_never_tear() {
        let spec = NetworkSpec::new(4, 2).with_hidden(vec![8]);
        let layout = ParamLayout::new(spec).unwrap();
        let store = ParameterStore::new(ParamVector::zeros(layout.clone()));
        // Each worker repeatedly adds a constant-sign gradient; snapshots in
        // between must always contain finite, monotone values.
        std::thread::scope(|scope| {
            for _ in 0..4 {
                scope.spawn(|| {
                    let mut grad = GradientVector::zeros(layout.clone());
                    for g in grad.as_mut_slice() {
                        *g = 1.0;
                    }
                    for _ in 0..200 {
                        store.apply_rmsprop(&grad, 1e-3).unwrap();
                        let snap = store.snapshot();
                        assert!(snap.as_slice().iter().all(|p| p.is_finite() && *p <= 0.0));
                    }
                });
            }
        });
    }
}
