"""Smoke test for the survgame_py extension module."""

import math

import survgame_py as sg


def main():
    p_d = sg.detection_probability(1500, 0.1, -10.0)
    assert 0.90 <= p_d <= 0.92, p_d

    assert sg.sequence_form_dims(4) == (86, 48)
    assert sg.sequence_form_dims(2) == (16, 8)

    game = sg.Game([0.2, 0.5], k_a=0.2, k_s=0.1, k_c=3.0, k_b=0.5)
    assert game.n_channels == 2
    assert game.attack_actions == ["none", "1", "2"]
    assert game.sequence_form_dims == (16, 8)

    eq = sg.solve(game)
    assert max(eq.gaps) <= 1e-7, eq.gaps
    assert abs(sum(eq.attacker) - 1.0) < 1e-9
    for dist in eq.defender:
        assert abs(sum(dist) - 1.0) < 1e-9

    report = sg.simulate(game, eq, 200_000, 7)
    for who in ("attacker", "defender"):
        analytic = getattr(eq, "omega_" + who)
        z = (report["mean_" + who] - analytic) / report["se_" + who]
        assert abs(z) <= 4.0, (who, z)
    assert report == sg.simulate(game, eq, 200_000, 7)

    channel = sg.Channel(0.3, p_d, 0.1, 0.2, 0.1, 2.0, 0.6)
    attack, monitor, regime = sg.single_channel(channel)
    single = sg.solve(sg.Game.from_channels([channel]))
    assert math.isclose(single.attacker[1], attack, abs_tol=1e-9), (single.attacker, attack)
    assert math.isclose(single.defender[1][1], monitor, abs_tol=1e-9), (single.defender, monitor)

    try:
        sg.Game([1.3], 0.2, 0.1, 3.0, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("pi = 1.3 accepted")

    print(f"ok: P_d={p_d:.6f} omega=({eq.omega_attacker:.6f}, {eq.omega_defender:.6f}) regime={regime}")


if __name__ == "__main__":
    main()
