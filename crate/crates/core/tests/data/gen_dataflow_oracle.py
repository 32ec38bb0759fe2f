"""Freeze reference query strings for the data-flow snippet set.

Each snippet runs twice under CPython with a stub driver and two different
runtime environments (environment variables, argv, stdin). Snippets whose
final query is identical in both runs are constant; the rest depend on
runtime input and must come out unresolved.

    python3 gen_dataflow_oracle.py > dataflow_oracle.json
"""
import builtins
import json
import os
import sys
import types

SNIPPETS = [
    ("literal", 'cur.execute("SELECT id FROM users")'),
    ("constant_var", 'Q = "SELECT name FROM people"\ncur.execute(Q)'),
    ("concat_literals", 'cur.execute("SELECT " + "a, b" + " FROM t")'),
    ("concat_chain", 'a = "SELECT *"\nb = a + " FROM orders"\nc = b + " WHERE id = 1"\ncur.execute(c)'),
    ("augmented", 'q = "SELECT *"\nq += " FROM t"\nq += " LIMIT 5"\ncur.execute(q)'),
    ("fstring_name", 'table = "users"\ncur.execute(f"SELECT * FROM {table}")'),
    ("fstring_int", 'limit = 10\ncur.execute(f"SELECT * FROM t LIMIT {limit}")'),
    ("fstring_two", 'col = "email"\ntab = "accounts"\ncur.execute(f"SELECT {col} FROM {tab} WHERE {col} IS NOT NULL")'),
    ("percent_tuple", 'cur.execute("SELECT %s FROM %s" % ("a", "t"))'),
    ("percent_single", 'table = "items"\ncur.execute("SELECT * FROM %s" % table)'),
    ("percent_named", 'cur.execute("SELECT %(c)s FROM %(t)s" % {"c": "phone", "t": "contacts"})'),
    ("format_positional", 'cur.execute("SELECT {} FROM {}".format("c", "t"))'),
    ("format_named", 'cur.execute("SELECT {col} FROM {tab}".format(col="x", tab="y"))'),
    ("format_indexed", 'cur.execute("SELECT {1} FROM {0}".format("tbl", "fld"))'),
    ("join_list", 'cols = ", ".join(["a", "b", "c"])\ncur.execute("SELECT " + cols + " FROM t")'),
    ("adjacent_literals", 'cur.execute(("SELECT a "\n             "FROM t "\n             "WHERE b = 2"))'),
    ("reassigned", 'q = "DELETE FROM t"\nq = "SELECT 1 FROM t"\ncur.execute(q)'),
    ("dict_lookup", 'cfg = {"table": "users", "col": "dob"}\ncur.execute("SELECT " + cfg["col"] + " FROM " + cfg["table"])'),
    ("list_index", 'tables = ["a", "b"]\ncur.execute("SELECT * FROM " + tables[1])'),
    ("tuple_negative_index", 'parts = ("SELECT *", " FROM x", " FROM y")\ncur.execute(parts[0] + parts[-1])'),
    ("str_of_int", 'cur.execute("SELECT * FROM t LIMIT " + str(5))'),
    ("upper_method", 'cur.execute("select * from t".upper())'),
    ("triple_quoted", 'cur.execute("""\n    SELECT name\n    FROM staff\n""")'),
    ("global_in_function", 'BASE = "SELECT salary FROM payroll"\ndef run():\n    cur.execute(BASE + " WHERE id = 1")\nrun()'),
    ("env_table", 'cur.execute("SELECT * FROM " + os.environ["TABLE"])'),
    ("stdin_fstring", 'name = input()\ncur.execute(f"SELECT * FROM t WHERE n = \'{name}\'")'),
    ("function_param", 'def find(uid):\n    cur.execute("SELECT * FROM u WHERE id = %s" % uid)\nfind(os.environ["UID"])'),
    ("argv_table", 'cur.execute("SELECT * FROM " + sys.argv[1])'),
    ("branch_join", 'q = "SELECT a FROM t" if os.environ.get("X") else "SELECT b FROM t"\ncur.execute(q)'),
    ("loop_built", 'q = "SELECT "\nfor c in os.environ["COLS"].split(","):\n    q += c\ncur.execute(q + " FROM t")'),
]

ENVS = [
    {"env": {"TABLE": "alpha", "UID": "1", "X": "1", "COLS": "a,b"}, "argv": ["prog", "alpha"], "stdin": "bob"},
    {"env": {"TABLE": "beta", "UID": "2", "X": "", "COLS": "c"}, "argv": ["prog", "beta"], "stdin": "eve"},
]

PREAMBLE = "import os\nimport sys\nimport pymysql\nconn = pymysql.connect(host='10.0.0.1', user='u', password='p')\ncur = conn.cursor()\n"


def run(code, env):
    seen = []

    class Cursor:
        def execute(self, q, *args):
            seen.append(q)

    class Conn:
        def cursor(self):
            return Cursor()

    stub = types.ModuleType("pymysql")
    stub.connect = lambda **kw: Conn()
    sys.modules["pymysql"] = stub
    saved_env, saved_argv, saved_input = dict(os.environ), sys.argv, builtins.input
    os.environ.clear()
    os.environ.update(env["env"])
    sys.argv = env["argv"]
    builtins.input = lambda *a: env["stdin"]
    try:
        exec(compile(PREAMBLE + code, "<snippet>", "exec"), {"__name__": "snippet"})
    finally:
        os.environ.clear()
        os.environ.update(saved_env)
        sys.argv, builtins.input = saved_argv, saved_input
    return seen[-1]


out = []
for name, code in SNIPPETS:
    a, b = (run(code, e) for e in ENVS)
    out.append({"name": name, "code": PREAMBLE + code, "expected": a if a == b else None})
assert len(out) == 30
json.dump(out, sys.stdout, indent=1, ensure_ascii=False)
sys.stdout.write("\n")
