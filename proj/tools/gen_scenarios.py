#!/usr/bin/env python3
"""Regenerate the bundled scenario files in scenarios/.

The three-agent scenario encodes the quadratic proximity requirement
(x1-xi)^2 + (y1-yi)^2 <= 1 as the inscribed regular octagon: eight affine
constraints cos(a_k)*dx + sin(a_k)*dy <= cos(pi/8) with a_k = (2k+1)*pi/8.
Every point of the octagon lies inside the unit disc, so the follower
specification is (slightly) strengthened, never weakened.
"""

import json
import math
import os


def box_pred(x, y, xlo, xhi, ylo, yhi):
    return f"{x} >= {xlo} & {x} <= {xhi} & {y} >= {ylo} & {y} <= {yhi}"


def linexpr(terms):
    """Render [(coeff, var), ...] with signs folded into +/- separators."""
    out = []
    for coeff, var in terms:
        if not out:
            out.append(f"{'-' if coeff < 0 else ''}{repr(abs(coeff))}*{var}")
        else:
            out.append(f" {'-' if coeff < 0 else '+'} {repr(abs(coeff))}*{var}")
    return "".join(out)


def octagon(leader, follower):
    """Affine inner approximation of |leader - follower| <= 1."""
    constraints = []
    apothem = repr(math.cos(math.pi / 8))
    x1, y1 = leader
    x2, y2 = follower
    for k in range(8):
        a = (2 * k + 1) * math.pi / 8
        c, s = math.cos(a), math.sin(a)
        lhs = linexpr([(c, x1), (-c, x2), (s, y1), (-s, y2)])
        constraints.append(f"{lhs} <= {apothem}")
    return " & ".join(constraints)


def double_integrator():
    B = [[0.125, 0], [0.5, 0], [0, 0.125], [0, 0.5]]
    phi_L = " & ".join(
        [
            f"F[1,10] ({box_pred('x', 'y', 8, 10, 8, 10)})",
            f"G[14,16] ({box_pred('x', 'y', 1, 4, 1, 4)})",
            f"F[20,25] ({box_pred('x', 'y', 8, 10, 0, 2)})",
        ]
    )
    phi_F = " & ".join(
        [
            f"F[4,9] ({box_pred('x', 'y', 1, 3, 6.5, 8)})",
            f"G[12,13] ({box_pred('x', 'y', 2, 5, 2, 5)})",
        ]
    )
    return {
        "state_names": ["x", "vx", "y", "vy"],
        "A": [[1, 0.5, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0.5], [0, 0, 0, 1]],
        "B_L": B,
        "B_F": B,
        "c": [0, 0, 0, 0],
        "x0": [2, 0, 6, 0],
        "N": 25,
        "state_bounds": {"lower": [0, -3, 0, -3], "upper": [10, 3, 10, 3]},
        "leader_bounds": {"lower": [-3, -3], "upper": [3, 3]},
        "follower_bounds": {"lower": [-0.01, -0.01], "upper": [0.01, 0.01]},
        "phi_L": phi_L,
        "phi_F": phi_F,
        "cost": {
            "effort_weight": 1.6e-7,
            "effort_norm": "squared_pwl",
            "pwl_segments": 6,
            "include_leader_robustness": True,
        },
    }


def three_agents():
    phi_L = " & ".join(
        [
            f"F[1,10] ({box_pred('x1', 'y1', 0, 2, 8, 10)})",
            f"G[14,16] ({box_pred('x1', 'y1', 7, 10, 7, 10)})",
            f"F[20,25] ({box_pred('x1', 'y1', 8, 10, 0, 2)})",
        ]
    )
    phi_F = " & ".join(
        [
            f"G[0,25] ({octagon(('x1', 'y1'), ('x2', 'y2'))})",
            f"G[0,25] ({octagon(('x1', 'y1'), ('x3', 'y3'))})",
            f"F[4,9] ({box_pred('x2', 'y2', 1, 3, 6.5, 8)})",
            f"G[15,17] ({box_pred('x2', 'y2', 8, 10, 6, 9)})",
            f"F[1,25] ({box_pred('x3', 'y3', 3, 6, 3, 6)})",
        ]
    )
    B_L = [[1, 0], [0, 1], [0, 0], [0, 0], [0, 0], [0, 0]]
    B_F = [
        [0, 0, 0, 0],
        [0, 0, 0, 0],
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ]
    eye = [[1 if i == j else 0 for j in range(6)] for i in range(6)]
    return {
        "state_names": ["x1", "y1", "x2", "y2", "x3", "y3"],
        "A": eye,
        "B_L": B_L,
        "B_F": B_F,
        "c": [0, 0, 0, 0, 0, 0],
        "x0": [2, 6, 2, 6, 2, 6],
        "N": 25,
        "state_bounds": {"lower": [0] * 6, "upper": [10] * 6},
        "leader_bounds": {"lower": [-1, -1], "upper": [1, 1]},
        "follower_bounds": {"lower": [-1] * 4, "upper": [1] * 4},
        "phi_L": phi_L,
        "phi_F": phi_F,
        "cost": {
            "effort_weight": 1.6e-7,
            "effort_norm": "squared_pwl",
            "pwl_segments": 6,
            "include_leader_robustness": True,
        },
    }


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "scenarios")
    os.makedirs(out_dir, exist_ok=True)
    for name, sc in [
        ("double_integrator.json", double_integrator()),
        ("three_agents.json", three_agents()),
    ]:
        path = os.path.join(out_dir, name)
        with open(path, "w") as f:
            json.dump(sc, f, indent=2)
            f.write("\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
