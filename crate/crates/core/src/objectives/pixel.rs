use crate::error::Result;
use crate::imgcore::Image2D;
use crate::scalar::Real;

/// Mean of √((x − y)² + ε²).
pub fn charbonnier<T: Real>(x: &Image2D<T>, y: &Image2D<T>, eps: T) -> Result<T> {
    Ok(charbonnier_grad(x, y, eps, false)?.0)
}

pub fn charbonnier_grad<T: Real>(x: &Image2D<T>, y: &Image2D<T>, eps: T, want_grad: bool) -> Result<(T, Option<Image2D<T>>)> {
    x.ensure_same_dims(y)?;
    let n = T::lit(x.len() as f64);
    let eps = eps.abs();
    let eps2 = eps * eps;
    let mut total = T::zero();
    let mut grad = want_grad.then(|| Image2D::zeros(x.height(), x.width()));
    for (i, (&a, &b)) in x.data().iter().zip(y.data()).enumerate() {
        let d = a - b;
        let root = (d * d + eps2).sqrt();
        total = total + (root - eps);
        if let Some(g) = grad.as_mut() {
            g.data_mut()[i] = if root > T::zero() { d / root / n } else { T::zero() };
        }
    }
    Ok((eps + total / n, grad))
}

/// Mean |x − y|.
pub fn pixel_l1<T: Real>(x: &Image2D<T>, y: &Image2D<T>) -> Result<T> {
    Ok(pixel_l1_grad(x, y, false)?.0)
}

pub fn pixel_l1_grad<T: Real>(x: &Image2D<T>, y: &Image2D<T>, want_grad: bool) -> Result<(T, Option<Image2D<T>>)> {
    x.ensure_same_dims(y)?;
    let n = T::lit(x.len() as f64);
    let total: T = x.data().iter().zip(y.data()).map(|(&a, &b)| (a - b).abs()).sum();
    let grad = want_grad.then(|| {
        Image2D::new(
            x.height(),
            x.width(),
            x.data()
                .iter()
                .zip(y.data())
                .map(|(&a, &b)| {
                    let d = a - b;
                    if d > T::zero() {
                        T::one() / n
                    } else if d < T::zero() {
                        -T::one() / n
                    } else {
                        T::zero()
                    }
                })
                .collect(),
        )
        .expect("same dims")
    });
    Ok((total / n, grad))
}
