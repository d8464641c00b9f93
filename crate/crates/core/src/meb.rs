//! Incremental 3/2-approximate minimum enclosing ball.
//!
//! Each point outside the current ball moves the center halfway toward it and
//! grows the radius by the same amount, so the far side of the old ball stays
//! on the boundary. A single pass over any stream keeps the radius within 1.5x
//! of the exact minimum.

use crate::error::{Error, Result};
use crate::geometry::{distance, Ball};

/// Extends `ball` (a 3/2-MEB of some earlier set) so that it also covers
/// `batch`. With no starting ball the first batch point seeds a radius-zero
/// ball; callers pass points in id order so the seed is the lowest id.
pub fn meb_update<'a, I>(ball: Option<Ball>, batch: I) -> Result<Ball>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut it = batch.into_iter();
    let mut ball = match ball {
        Some(b) => b,
        None => {
            let seed = it
                .next()
                .ok_or_else(|| Error::usage("meb_update needs a ball or a nonempty batch"))?;
            Ball::point(seed)
        }
    };
    for q in it {
        absorb(&mut ball, q);
    }
    Ok(ball)
}

/// One update step. Returns true when the ball moved.
#[inline]
pub(crate) fn absorb(ball: &mut Ball, q: &[f64]) -> bool {
    let dist = distance(q, &ball.center);
    if dist > ball.radius {
        let delta = 0.5 * (dist - ball.radius);
        let step = delta / dist;
        for (c, &x) in ball.center.iter_mut().zip(q) {
            *c += step * (x - *c);
        }
        ball.radius += delta;
        true
    } else {
        false
    }
}
