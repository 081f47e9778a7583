use super::IVector;
use crate::error::{Error, Result};
use crate::pipeline::SubjectRecord;

/// Default half-width, in years, of the age window used to pick controls.
pub const DEFAULT_AGE_WINDOW: f64 = 2.0;

/// Mean i-vector of same-gender controls within `age_window` years of the patient.
///
/// When nobody falls inside the window it is widened one year at a time
/// until at least one same-gender control matches. Matches are averaged in
/// subject-id order, so the result does not depend on the input order.
pub fn build_reference(
    controls: &[(IVector, SubjectRecord)],
    patient: &SubjectRecord,
    age_window: f64,
) -> Result<IVector> {
    if controls.is_empty() {
        return Err(Error::invalid("empty control pool"));
    }
    if !(age_window >= 0.0) {
        return Err(Error::invalid("age window must be non-negative"));
    }
    let same_gender: Vec<&(IVector, SubjectRecord)> = controls
        .iter()
        .filter(|(_, rec)| rec.gender == patient.gender)
        .collect();
    let widest = same_gender
        .iter()
        .map(|(_, rec)| (rec.age - patient.age).abs())
        .fold(f64::NAN, f64::min);
    if widest.is_nan() {
        return Err(Error::invalid(format!(
            "no {} control available for patient {}",
            patient.gender, patient.id
        )));
    }
    let mut window = age_window;
    while widest > window {
        window += 1.0;
    }
    let mut matched: Vec<&(IVector, SubjectRecord)> = same_gender
        .into_iter()
        .filter(|(_, rec)| (rec.age - patient.age).abs() <= window)
        .collect();
    matched.sort_by(|a, b| {
        a.1.id.cmp(&b.1.id).then_with(|| {
            let ka = a.0.values.iter().map(|v| v.to_bits());
            let kb = b.0.values.iter().map(|v| v.to_bits());
            ka.cmp(kb)
        })
    });

    let dim = matched[0].0.dim();
    let mut mean = vec![0.0; dim];
    for (iv, _) in &matched {
        if iv.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: iv.dim(),
            });
        }
        for (m, v) in mean.iter_mut().zip(&iv.values) {
            *m += v;
        }
    }
    let n = matched.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let mut out = IVector::new(mean)?;
    out.subject = format!("reference:{}", patient.id);
    out.feature_set = matched[0].0.feature_set;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Gender;

    fn control(id: &str, g: Gender, age: f64, v: &[f64]) -> (IVector, SubjectRecord) {
        (
            IVector::new(v.to_vec()).unwrap(),
            SubjectRecord::control(id, g, age).unwrap(),
        )
    }

    #[test]
    fn window_and_gender_filter() {
        let pool = vec![
            control("a", Gender::M, 59.0, &[1.0, 0.0]),
            control("b", Gender::M, 61.0, &[3.0, 2.0]),
            control("c", Gender::M, 70.0, &[100.0, 100.0]),
            control("d", Gender::F, 60.0, &[-100.0, 5.0]),
        ];
        let p = SubjectRecord::patient("p", Gender::M, 60.0, 20).unwrap();
        let r = build_reference(&pool, &p, DEFAULT_AGE_WINDOW).unwrap();
        assert_eq!(r.values, vec![2.0, 1.0]);
    }

    #[test]
    fn single_match_is_returned_verbatim() {
        let pool = vec![
            control("a", Gender::F, 50.0, &[0.1, 0.2, 0.3]),
            control("b", Gender::M, 50.0, &[9.0, 9.0, 9.0]),
        ];
        let p = SubjectRecord::patient("p", Gender::F, 51.0, 20).unwrap();
        assert_eq!(
            build_reference(&pool, &p, 2.0).unwrap().values,
            vec![0.1, 0.2, 0.3]
        );
    }

    #[test]
    fn window_widens_until_a_match() {
        let pool = vec![
            control("a", Gender::F, 80.0, &[4.0, 4.0]),
            control("b", Gender::F, 40.0, &[1.0, 1.0]),
            control("c", Gender::M, 90.0, &[7.0, 7.0]),
        ];
        let p = SubjectRecord::patient("p", Gender::F, 90.0, 20).unwrap();
        assert_eq!(build_reference(&pool, &p, 2.0).unwrap().values, vec![4.0, 4.0]);
    }

    #[test]
    fn missing_gender_is_an_error() {
        let pool = vec![control("a", Gender::F, 60.0, &[1.0])];
        let p = SubjectRecord::patient("p", Gender::M, 60.0, 20).unwrap();
        assert!(build_reference(&pool, &p, 2.0).is_err());
        assert!(build_reference(&[], &p, 2.0).is_err());
    }

    #[test]
    fn order_of_controls_does_not_matter() {
        let mut pool: Vec<_> = (0..9)
            .map(|i| {
                control(
                    &format!("c{i}"),
                    Gender::M,
                    60.0 + (i % 3) as f64,
                    &[0.1 * i as f64 + 1e-17, 1.0 / (i as f64 + 3.0)],
                )
            })
            .collect();
        let p = SubjectRecord::patient("p", Gender::M, 61.0, 20).unwrap();
        let forward = build_reference(&pool, &p, 2.0).unwrap();
        pool.reverse();
        pool.swap(1, 5);
        assert_eq!(build_reference(&pool, &p, 2.0).unwrap(), forward);
    }
}
