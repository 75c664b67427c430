use graspctl_core::simworld::{load_scenario, HandPose, Scenario, SimObject, Steering, WorldState};
use graspctl_core::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const APPROACH_TOML: &str = include_str!("../../../../scenarios/approach.toml");

/// Object 400 mm ahead, hand at 100 mm/s, 70 degree tilt to release.
pub fn approach() -> Scenario {
    load_scenario(APPROACH_TOML).expect("bundled scenario parses")
}

pub fn empty_room(duration_ms: u64) -> Scenario {
    Scenario {
        seed: 1,
        duration_ms,
        initial: WorldState::new(HandPose::default(), vec![]),
        timeline: vec![(0, Steering { velocity: Vec3::new(100.0, 0.0, 0.0), ..Steering::default() })],
        expect: None,
    }
}

fn scatter(rng: &mut ChaCha8Rng) -> Vec<SimObject> {
    let n = rng.gen_range(1..=4);
    let mut objects: Vec<SimObject> = Vec::new();
    while objects.len() < n {
        let center = Vec3::new(rng.gen_range(200.0..700.0), rng.gen_range(-150.0..150.0), rng.gen_range(-150.0..150.0));
        let radius = rng.gen_range(15.0..45.0);
        let clear = objects.iter().all(|o| (o.center - center).norm() > o.radius + radius + 20.0);
        if clear && center.norm() - radius > 100.0 {
            let id = objects.len() as u32;
            objects.push(SimObject { id, label: format!("obj{id}"), class_id: id + 1, center, radius, attached: false });
        }
    }
    objects
}

fn steer(velocity: Vec3, tilt: f64) -> Steering {
    Steering { velocity, tilt_target_deg: tilt, ..Steering::default() }
}

/// Straight reach from `from` until the palm is `stop_at` mm from the
/// object's surface. Returns the velocity, the travel time, and the end point.
fn reach(from: Vec3, to: &SimObject, speed: f64, stop_at: f64) -> (Vec3, u64, Vec3) {
    let offset = to.center - from;
    let dir = offset.normalized().expect("palm is outside every object");
    let travel = (offset.norm() - to.radius - stop_at).max(0.0);
    let t = (travel / speed * 1000.0) as u64;
    (dir * speed, t, from + dir * (speed * t as f64 / 1000.0))
}

/// A few objects scattered ahead of the hand. The wearer reaches for one at
/// a random speed, tilts to let go, straightens the wrist, then reaches for
/// another one (if there is one) and lets go of that too.
pub fn randomized(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = scatter(&mut rng);
    let mut timeline = Vec::new();
    let mut t = 0;
    let mut palm = Vec3::ZERO;
    let mut order: Vec<usize> = (0..objects.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for &target in order.iter().take(2) {
        let (v, dt, end) = reach(palm, &objects[target], rng.gen_range(50.0..200.0), rng.gen_range(20.0..60.0));
        timeline.push((t, steer(v, 0.0)));
        t += dt;
        palm = end;
        timeline.push((t, steer(Vec3::ZERO, 0.0)));
        t += rng.gen_range(800..2500);
        timeline.push((t, steer(Vec3::ZERO, 70.0)));
        t += 1500;
        timeline.push((t, steer(Vec3::ZERO, 0.0)));
        t += 2500;
    }
    Scenario { seed, duration_ms: t + 1000, initial: WorldState::new(HandPose::default(), objects), timeline, expect: None }
}

/// Reach, release, then pull straight back through the grasp distance.
/// Used to pin down how the filtered range lags a receding hand.
pub fn reach_and_withdraw(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = scatter(&mut rng);
    let target = &objects[rng.gen_range(0..objects.len())];
    let (v, t_stop, _) = reach(Vec3::ZERO, target, rng.gen_range(50.0..200.0), rng.gen_range(20.0..60.0));
    let t_tilt = t_stop + rng.gen_range(800..2500);
    let t_back = t_tilt + 1500;
    let back = v.normalized().unwrap() * -rng.gen_range(100.0..200.0);
    Scenario {
        seed,
        duration_ms: t_back + 4000,
        initial: WorldState::new(HandPose::default(), objects),
        timeline: vec![
            (0, steer(v, 0.0)),
            (t_stop, steer(Vec3::ZERO, 0.0)),
            (t_tilt, steer(Vec3::ZERO, 70.0)),
            (t_back, steer(back, 0.0)),
        ],
        expect: None,
    }
}
