"""Regenerates the WikiSQL-shaped fixtures under tests/data. Output is committed."""
import json
import random
from pathlib import Path

HERE = Path(__file__).parent
rng = random.Random(7)

TABLES = [
    ("2-10000-1", ["Player", "Team", "Points", "Year"], ["text", "text", "real", "real"],
     [["Alice", "Red", 10, 2001], ["Bob", "Blue", 20, 2002], ["Carol", "Red", 30, 2003], ["Dave", "Green", 20, 2004]]),
    ("2-10000-2", ["City", "Country", "Population", "Area"], ["text", "text", "real", "real"],
     [["Lyon", "France", 513000, 47.9], ["Porto", "Portugal", 232000, 41.4], ["Graz", "Austria", 291000, 127.6],
      ["Split", "Croatia", 178000, "n/a"]]),
    ("2-10000-3", ["Film", "Director", "Year", "Gross"], ["text", "text", "real", "real"],
     [["Alien", "Scott", 1979, 104.9], ["Heat", "Mann", 1995, 187.4], ["Fargo", "Coen", 1996, 60.6]]),
]

with open(HERE / "wikisql" / "tables.jsonl", "w") as f:
    for tid, header, types, rows in TABLES:
        f.write(json.dumps({"id": tid, "header": header, "types": types, "rows": rows}) + "\n")

TEMPLATES = [
    "What is the {sel} when the {col} is {val}?",
    "Which {sel} has a {col} of {val}?",
    "Tell me the {sel} for {col} {val}",
    "list the {sel} where {col} equals {val}",
]

with open(HERE / "wikisql" / "dev.jsonl", "w") as f:
    for i in range(100):
        tid, header, types, rows = TABLES[i % len(TABLES)]
        sel = rng.randrange(len(header))
        col = rng.choice([c for c in range(len(header)) if c != sel])
        row = rng.choice(rows)
        val = row[col]
        if val == "n/a":
            val = rows[0][col]
        agg = rng.choice([0, 3]) if types[sel] == "text" else rng.choice([0, 1, 2, 3, 4, 5])
        q = rng.choice(TEMPLATES).format(sel=header[sel].lower(), col=header[col].lower(), val=val)
        f.write(json.dumps({"id": f"ex{i:03d}", "question": q, "table_id": tid,
                            "sql": {"sel": sel, "agg": agg, "conds": [[col, 0, val]]}}) + "\n")

# Evaluation fixture: 10 examples, 6 logical-form matches, 8 execution matches.
M = "2-10000-1"
PAIRS = [
    ({"sel": 2, "agg": 0, "conds": [[0, 0, "Alice"]]}, {"sel": 2, "agg": 0, "conds": [[0, 0, "Alice"]]}),
    ({"sel": 0, "agg": 3, "conds": [[1, 0, "Red"]]}, {"sel": 0, "agg": 3, "conds": [[1, 0, "Red"]]}),
    ({"sel": 0, "agg": 0, "conds": [[2, 0, 20], [1, 0, "Blue"]]}, {"sel": 0, "agg": 0, "conds": [[1, 0, "Blue"], [2, 0, 20]]}),
    ({"sel": 1, "agg": 0, "conds": [[3, 0, 2003]]}, {"sel": 1, "agg": 0, "conds": [[3, 0, "2003.0"]]}),
    ({"sel": 2, "agg": 1, "conds": [[1, 0, "Red"]]}, {"sel": 2, "agg": 1, "conds": [[1, 0, "Red"]]}),
    ({"sel": 3, "agg": 0, "conds": [[0, 0, "Dave"]]}, {"sel": 3, "agg": 0, "conds": [[0, 0, "dave"]]}),
    ({"sel": 0, "agg": 0, "conds": [[1, 0, "Blue"]]}, {"sel": 0, "agg": 0, "conds": [[0, 0, "Bob"]]}),
    ({"sel": 0, "agg": 3, "conds": [[2, 1, 15]]}, {"sel": 1, "agg": 3, "conds": [[3, 1, 2001], [2, 1, 0]]}),
    ({"sel": 2, "agg": 0, "conds": [[0, 0, "Carol"]]}, {"sel": 2, "agg": 3, "conds": [[0, 0, "Carol Smith"]]}),
    ({"sel": 2, "agg": 4, "conds": [[1, 0, "Red"]]}, {"sel": 0, "agg": 4, "conds": [[1, 0, "Red"]]}),
]
with open(HERE / "metric" / "gold.jsonl", "w") as g, open(HERE / "metric" / "pred.jsonl", "w") as p:
    for i, (gold, pred) in enumerate(PAIRS):
        g.write(json.dumps({"id": f"m{i}", "question": f"q{i}", "table_id": M, "sql": gold}) + "\n")
        p.write(json.dumps({"id": f"m{i}", "sql": pred}) + "\n")
