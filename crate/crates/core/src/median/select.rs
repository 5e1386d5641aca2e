//! Worst-case linear-time selection: quickselect with a median-of-medians pivot.
//!
//! Values are ordered by `f64::total_cmp`, so the result agrees bit-for-bit with
//! `sort_by(f64::total_cmp)` followed by indexing.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Lower median: the `ceil(n/2)`-th smallest element. Reorders `values`.
pub fn select_median(values: &mut [f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("median of an empty set"));
    }
    let k = values.len().div_ceil(2) - 1;
    Ok(select_nth(values, k))
}

/// The `k`-th smallest element (0-based). Panics if `k >= values.len()`.
pub fn select_nth(values: &mut [f64], k: usize) -> f64 {
    assert!(k < values.len(), "rank {k} out of range for {} values", values.len());
    let mut a = values;
    let mut k = k;
    loop {
        if a.len() <= 10 {
            insertion_sort(a);
            return a[k];
        }
        let pivot = median_of_medians(a);
        let (lt, eq) = partition3(a, pivot);
        if k < lt {
            a = &mut a[..lt];
        } else if k < lt + eq {
            return pivot;
        } else {
            k -= lt + eq;
            a = &mut a[lt + eq..];
        }
    }
}

fn insertion_sort(a: &mut [f64]) {
    for i in 1..a.len() {
        let mut j = i;
        while j > 0 && a[j - 1].total_cmp(&a[j]) == Ordering::Greater {
            a.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// Sorts groups of five, gathers their medians at the front and selects the middle one.
fn median_of_medians(a: &mut [f64]) -> f64 {
    let n = a.len();
    let groups = n.div_ceil(5);
    for g in 0..groups {
        let start = 5 * g;
        let end = (start + 5).min(n);
        insertion_sort(&mut a[start..end]);
        a.swap(g, start + (end - start - 1) / 2);
    }
    select_nth(&mut a[..groups], (groups - 1) / 2)
}

/// Three-way partition around `pivot`; returns (#less, #equal).
fn partition3(a: &mut [f64], pivot: f64) -> (usize, usize) {
    let mut lo = 0;
    let mut mid = 0;
    let mut hi = a.len();
    while mid < hi {
        match a[mid].total_cmp(&pivot) {
            Ordering::Less => {
                a.swap(lo, mid);
                lo += 1;
                mid += 1;
            }
            Ordering::Equal => mid += 1,
            Ordering::Greater => {
                hi -= 1;
                a.swap(mid, hi);
            }
        }
    }
    (lo, mid - lo)
}
