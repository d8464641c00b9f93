//! Fills every tree node with a 3/2-approximate enclosing ball.

use crate::error::{Error, Result};
use crate::geometry::{Ball, PointSet};
use crate::meb::meb_update;
use crate::rst::Rst;

/// Annotates `rst` bottom-up. Leaves get a radius-zero ball on their point;
/// an internal node takes its large child's ball and streams the small
/// child's points into it. Iterative, so degenerate (path-like) trees are fine.
pub fn annotate(rst: &mut Rst, points: &PointSet) -> Result<()> {
    if rst.is_annotated() {
        return Err(Error::usage("tree is already annotated"));
    }
    for id in rst.post_order(rst.root()) {
        let node = rst.node(id);
        let ball = match (node.large_child(), node.small_child()) {
            (Some(large), Some(small)) => {
                let start = rst
                    .node(large)
                    .ball()
                    .cloned()
                    .expect("child annotated first");
                let batch = rst.points_of(small).map(|p| points.point(p));
                meb_update(Some(start), batch)?
            }
            _ => Ball::point(points.point(node.point().expect("leaf without a point"))),
        };
        rst.set_ball(id, ball);
    }
    Ok(())
}
