//! The preference domain for a fixed problem size: every weak order with its
//! canonical index, plus the separations between them.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::axioms::{enumerate_separations, Separation};
use crate::order::{enumerate_weak_orders, AltSet, OrderError, WeakOrder};

/// Largest problem size whose domain is materialized (a(8) = 545835 orders).
pub const MAX_DOMAIN_M: usize = 8;

/// A separation expressed through canonical order indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SepIndex {
    pub coarse: usize,
    pub fine: usize,
    /// Zero-based index of the split class in the coarse order.
    pub class: usize,
    pub upper: AltSet,
    pub lower: AltSet,
}

#[derive(Debug)]
pub struct Domain {
    m: usize,
    orders: Vec<WeakOrder>,
    index: HashMap<WeakOrder, usize>,
    separations: OnceLock<Vec<SepIndex>>,
}

impl Domain {
    pub fn new(m: usize) -> Result<Arc<Domain>, OrderError> {
        if m > MAX_DOMAIN_M {
            return Err(OrderError::TooLarge(m));
        }
        let orders = enumerate_weak_orders(m)?;
        let index = orders.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        Ok(Arc::new(Domain {
            m,
            orders,
            index,
            separations: OnceLock::new(),
        }))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn orders(&self) -> &[WeakOrder] {
        &self.orders
    }

    pub fn order(&self, idx: usize) -> &WeakOrder {
        &self.orders[idx]
    }

    pub fn index_of(&self, order: &WeakOrder) -> Option<usize> {
        self.index.get(order).copied()
    }

    /// All separations, ordered by coarse index, then split class, then the
    /// upper part's bitmask.
    pub fn separations(&self) -> &[SepIndex] {
        self.separations.get_or_init(|| {
            self.orders
                .iter()
                .enumerate()
                .flat_map(|(coarse, order)| {
                    enumerate_separations(order).into_iter().map(move |sep| (coarse, sep))
                })
                .map(|(coarse, sep)| SepIndex {
                    coarse,
                    fine: self.index[&sep.fine],
                    class: sep.class,
                    upper: sep.upper,
                    lower: sep.lower,
                })
                .collect()
        })
    }

    pub fn separation(&self, s: &SepIndex) -> Separation {
        Separation {
            coarse: self.orders[s.coarse].clone(),
            fine: self.orders[s.fine].clone(),
            class: s.class,
            upper: s.upper,
            lower: s.lower,
        }
    }
}
