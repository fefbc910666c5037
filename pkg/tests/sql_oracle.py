"""Independent evaluator: translate a query to SQL and run it in SQLite."""

import sqlite3

from trcdiagram.trc import (
    Binding,
    And,
    BooleanQuery,
    Exists,
    Forall,
    Implies,
    JoinPred,
    Not,
    Or,
    SelPred,
    parse_builtin,
    walk,
)

SQL_OP = {"=": "=", "!=": "<>", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class _Sql:
    def __init__(self, out_var=None, header=()):
        self.out = {(out_var, a): f"d{i}.v" for i, a in enumerate(header)}

    def ref(self, attr):
        if (attr.var, attr.name) in self.out:
            return self.out[(attr.var, attr.name)]
        return f'{attr.var}."{attr.name}"'

    def f(self, n):
        if isinstance(n, SelPred):
            return f"{self.ref(n.left)} {SQL_OP[n.op.value]} {n.const!r}"
        if isinstance(n, JoinPred):
            return f"{self.ref(n.left)} {SQL_OP[n.op.value]} {self.ref(n.right)}"
        if isinstance(n, Not):
            return f"NOT ({self.f(n.body)})"
        if isinstance(n, And):
            return "(" + " AND ".join(self.f(c) for c in n.children) + ")" if n.children else "1"
        if isinstance(n, Or):
            return "(" + " OR ".join(self.f(c) for c in n.children) + ")"
        if isinstance(n, Implies):
            return f"(NOT ({self.f(n.left)}) OR ({self.f(n.right)}))"
        tables = ", ".join(f'"{b.relation.replace(chr(34), chr(34) * 2)}" AS {b.var}' for b in n.bindings)
        if isinstance(n, Exists):
            return f"EXISTS (SELECT 1 FROM {tables} WHERE {self.f(n.body)})"
        if isinstance(n, Forall):
            return f"NOT EXISTS (SELECT 1 FROM {tables} WHERE NOT ({self.f(n.body)}))"
        raise TypeError(n)


def sql_eval(q, db, dom, schemas):
    con = sqlite3.connect(":memory:")
    for name, attrs in schemas.items():
        rel = db.get(name)
        attrs = rel.schema if rel is not None else attrs
        cols = ", ".join(f'"{a}"' for a in attrs) or '"_"'
        con.execute(f'CREATE TABLE "{name}" ({cols})')
        for t in rel.tuples if rel is not None else ():
            con.execute(f'INSERT INTO "{name}" VALUES ({", ".join("?" * len(t)) or "NULL"})', t)
    con.execute("CREATE TABLE dom (v)")
    con.executemany("INSERT INTO dom VALUES (?)", [(d,) for d in dom])
    # built-in relations materialized from the domain
    for name in {n.relation for _, n in walk(q.body) if isinstance(n, Binding)}:
        parsed = parse_builtin(name)
        if parsed is None:
            continue
        op, const = parsed
        sqlop = SQL_OP[op.value]
        quoted = name.replace('"', '""')
        if const is None:
            con.execute(
                f'CREATE TABLE "{quoted}" AS SELECT a.v AS "$1", b.v AS "$2" FROM dom a, dom b '
                f"WHERE typeof(a.v) = typeof(b.v) AND a.v {sqlop} b.v"
            )
        else:
            con.execute(
                f'CREATE TABLE "{quoted}" AS SELECT v AS "$1" FROM dom WHERE typeof(v) = typeof(?) AND v {sqlop} ?',
                (const, const),
            )
    if isinstance(q, BooleanQuery):
        (value,) = con.execute(f"SELECT {_Sql().f(q.body)}").fetchone()
        return bool(value)
    sql = _Sql(q.out_var, q.header)
    froms = ", ".join(f"dom AS d{i}" for i in range(len(q.header)))
    cols = ", ".join(f"d{i}.v" for i in range(len(q.header)))
    rows = con.execute(f"SELECT DISTINCT {cols} FROM {froms} WHERE {sql.f(q.body)}").fetchall()
    return frozenset(tuple(r) for r in rows)
