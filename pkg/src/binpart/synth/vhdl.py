"""Two-process FSMD VHDL emission and a small well-formedness checker."""

from __future__ import annotations

import re
from collections import deque

from .bind import DONE, IDLE, MicroOp, Operand, RtlDesign

W = "unsigned(31 downto 0)"


def vhdl_name(text: str) -> str:
    """A legal basic identifier: letters, digits, single underscores, letter first."""
    s = re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")
    s = re.sub(r"_+", "_", s)
    if not s or not s[0].isalpha():
        s = "r_" + s
    return s


def _lit(v: int) -> str:
    return f'x"{v & 0xFFFFFFFF:08X}"'


def _old(o: Operand) -> str:
    return _lit(o.imm) if o.reg is None else o.reg


def _new(o: Operand) -> str:
    return _lit(o.imm) if o.reg is None else "v_" + o.reg


def _amount(o: Operand) -> str:
    return str(o.imm & 31) if o.reg is None else f"to_integer({o.reg}(4 downto 0))"


def _expr(m: MicroOp) -> str:
    a = _old(m.srcs[0])
    if m.kind == "copy":
        return a
    b = _old(m.srcs[1])
    k = m.kind
    if k in ("add", "sub"):
        return f"{a} {'+' if k == 'add' else '-'} {b}"
    if k == "mul":
        return f"resize({a} * {b}, 32)"
    if k in ("and", "or", "xor"):
        return f"{a} {k} {b}"
    if k == "nor":
        return f"not ({a} or {b})"
    if k == "shl":
        return f"shift_left({a}, {_amount(m.srcs[1])})"
    if k == "lshr":
        return f"shift_right({a}, {_amount(m.srcs[1])})"
    if k == "ashr":
        return f"unsigned(shift_right(signed({a}), {_amount(m.srcs[1])}))"
    if k == "slt":
        return f"b2u(signed({a}) < signed({b}))"
    if k == "sltu":
        return f"b2u({a} < {b})"
    if k == "eq":
        return f"b2u({a} = {b})"
    if k == "ne":
        return f"b2u({a} /= {b})"
    raise ValueError(f"no VHDL for {k}")


def _micro(m: MicroOp, pad: str) -> list[str]:
    if m.kind == "store":
        out = [f"mem_addr <= {_old(m.srcs[0])};", f"mem_wdata <= {_old(m.srcs[1])};", "mem_we <= '1';"]
        if m.size == 1:
            out.append("mem_byte <= '1';")
        return [pad + s for s in out]
    if m.kind == "load":
        out = [f"mem_addr <= {_old(m.srcs[0])};", "mem_re <= '1';"]
        if m.size == 1:
            out.append("mem_byte <= '1';")
            if m.signed:
                val = "unsigned(resize(signed(mem_rdata(7 downto 0)), 32))"
            else:
                val = "resize(mem_rdata(7 downto 0), 32)"
        else:
            val = "mem_rdata"
        if m.dest is not None:
            out.append(f"v_{m.dest} := {val};")
        return [pad + s for s in out]
    if m.dest is None:
        return []
    return [f"{pad}v_{m.dest} := {_expr(m)};  -- n{m.node} {m.unit}#{m.instance}"]


def _edge(design: RtlDesign, e, pad: str) -> list[str]:
    out = []
    for dst, src in e.copies:
        val = src.reg if src.reg in design.phi_regs else _new(src)
        out.append(f"{pad}v_{dst} := {val};")
    if e.exit_index is not None:
        out.append(f"{pad}v_exit_r := to_unsigned({e.exit_index}, 8);")
    out.append(f"{pad}state_next <= {e.target};")
    return out


def emit_vhdl(design: RtlDesign, entity: str | None = None) -> str:
    name = vhdl_name(entity or design.name)
    regs = list(design.registers)
    has_exit = bool(design.exits)
    if has_exit:
        regs.append("exit_r")
    L: list[str] = [
        "library ieee;",
        "use ieee.std_logic_1164.all;",
        "use ieee.numeric_std.all;",
        "",
        f"entity {name} is",
        "  port (",
    ]
    ports = ["    clk : in std_logic", "    rst : in std_logic", "    start : in std_logic",
             "    done : out std_logic"]
    ports += [f"    {p} : in {W}" for p, _, _ in design.inputs]
    ports += [f"    {p} : out {W}" for p, _, _ in design.outputs]
    ports += [f"    {p} : out {W}" for p, _, _ in design.returns]
    if has_exit:
        ports.append("    exit_idx : out unsigned(7 downto 0)")
    ports += [f"    mem_addr : out {W}", f"    mem_wdata : out {W}", f"    mem_rdata : in {W}",
              "    mem_we : out std_logic", "    mem_re : out std_logic", "    mem_byte : out std_logic"]
    L += [p + ";" for p in ports[:-1]] + [ports[-1], "  );", f"end entity {name};", ""]

    def width(r):
        return "unsigned(7 downto 0)" if r == "exit_r" else W

    state_names = [s.name for s in design.states]
    L.append(f"architecture rtl of {name} is")
    L.append("  type state_t is (")
    L += [f"    {s}," for s in state_names[:-1]] + [f"    {state_names[-1]}", "  );"]
    L.append("  signal state, state_next : state_t;")
    for r in regs:
        L.append(f"  signal {r}, {r}_next : {width(r)};")
    L += [
        "",
        "  function b2u(b : boolean) return unsigned is",
        "  begin",
        "    if b then",
        "      return to_unsigned(1, 32);",
        "    else",
        "      return to_unsigned(0, 32);",
        "    end if;",
        "  end function b2u;",
        "begin",
        "",
        "  seq : process (clk)",
        "  begin",
        "    if rising_edge(clk) then",
        "      if rst = '1' then",
        f"        state <= {IDLE};",
        "      else",
        "        state <= state_next;",
    ]
    L += [f"        {r} <= {r}_next;" for r in regs]
    L += ["      end if;", "    end if;", "  end process seq;", ""]

    sens = ["state", "start", "mem_rdata"] + regs + [p for p, _, _ in design.inputs]
    L.append(f"  comb : process ({', '.join(sens)})")
    L += [f"    variable v_{r} : {width(r)};" for r in regs]
    L.append("  begin")
    L += [f"    v_{r} := {r};" for r in regs]
    L += ["    state_next <= state;", "    done <= '0';", f"    mem_addr <= {_lit(0)};",
          f"    mem_wdata <= {_lit(0)};", "    mem_we <= '0';", "    mem_re <= '0';", "    mem_byte <= '0';",
          "    case state is"]
    for st in design.states:
        L.append(f"      when {st.name} =>")
        p = " " * 8
        if st.name == IDLE:
            L.append(p + "if start = '1' then")
            L += [f"{p}  v_{reg} := {port};" for port, _, reg in design.inputs]
            L.append(f"{p}  state_next <= {design.entry_state};")
            L.append(p + "end if;")
            continue
        if st.name == DONE:
            L += [p + "done <= '1';", p + f"state_next <= {IDLE};"]
            continue
        for m in st.ops:
            L += _micro(m, p)
        if st.cond is not None:
            L.append(f"{p}if {_new(st.cond)} /= {_lit(0)} then")
            L += _edge(design, st.edges[0], p + "  ")
            L.append(p + "else")
            L += _edge(design, st.edges[1], p + "  ")
            L.append(p + "end if;")
        elif st.edges:
            L += _edge(design, st.edges[0], p)
        else:
            L.append(f"{p}state_next <= {st.next};")
    L.append("    end case;")
    L += [f"    {r}_next <= v_{r};" for r in regs]
    L += ["  end process comb;", ""]
    for port, _, src in design.outputs + design.returns:
        L.append(f"  {port} <= {_old(src)};")
    if has_exit:
        L.append("  exit_idx <= exit_r;")
    L += [f"end architecture rtl;", ""]
    return "\n".join(L)


# -- checker ---------------------------------------------------------------------

KEYWORDS = frozenset("""
library use all entity is port in out inout end architecture of type signal variable function return
begin process if then else elsif case when others and or xor not nor rising_edge unsigned signed
std_logic downto to resize shift_left shift_right to_integer to_unsigned boolean ieee std_logic_1164
numeric_std rtl
""".split())

_OPENERS = [
    ("entity", re.compile(r"^\s*entity\s+\w+\s+is\b"), re.compile(r"^\s*end\s+entity\b")),
    ("architecture", re.compile(r"^\s*architecture\b"), re.compile(r"^\s*end\s+architecture\b")),
    ("function", re.compile(r"^\s*function\b"), re.compile(r"^\s*end\s+function\b")),
    ("process", re.compile(r"^\s*(\w+\s*:\s*)?process\b"), re.compile(r"^\s*end\s+process\b")),
    ("case", re.compile(r"^\s*case\b"), re.compile(r"^\s*end\s+case\b")),
    ("if", re.compile(r"^\s*if\b.*\bthen\s*$"), re.compile(r"^\s*end\s+if\b")),
]


def check_vhdl(text: str) -> list[str]:
    """Problems found in emitted VHDL: unbalanced constructs, undeclared names, unreachable states."""
    problems = []
    lines = [ln.split("--", 1)[0] for ln in text.splitlines()]
    stack: list[tuple[str, int]] = []
    for i, ln in enumerate(lines, 1):
        for kind, opener, closer in _OPENERS:
            if closer.match(ln):
                if not stack or stack[-1][0] != kind:
                    problems.append(f"line {i}: end {kind} without a matching {kind}")
                else:
                    stack.pop()
                break
            if opener.match(ln):
                stack.append((kind, i))
                break
    problems += [f"line {i}: {kind} never closed" for kind, i in stack]
    if text.count("(") != text.count(")"):
        problems.append("unbalanced parentheses")

    body = "\n".join(lines)
    declared = set()
    declared.update(re.findall(r"^\s*(\w+)\s*:\s*(?:in|out)\b", body, re.M))
    for names in re.findall(r"^\s*signal\s+([\w\s,]+):", body, re.M):
        declared.update(n.strip() for n in names.split(","))
    declared.update(re.findall(r"^\s*variable\s+(\w+)\s*:", body, re.M))
    declared.update(re.findall(r"^\s*function\s+(\w+)", body, re.M))
    declared.update(re.findall(r"^\s*(\w+)\s*:\s*process\b", body, re.M))
    declared.update(re.findall(r"^\s*(?:entity|architecture)\s+(\w+)", body, re.M))
    declared.add("b")   # the b2u parameter
    m = re.search(r"type\s+state_t\s+is\s*\(([^)]*)\)", body)
    states = [s.strip() for s in m.group(1).split(",")] if m else []
    if not m:
        problems.append("no state type")
    declared.update(states)
    declared.add("state_t")
    stripped = re.sub(r'x"[0-9A-Fa-f]*"|\'[01]\'', " ", body)
    for word in sorted(set(re.findall(r"\b[A-Za-z]\w*\b", stripped))):
        if word.lower() not in KEYWORDS and word not in declared:
            problems.append(f"undeclared name {word}")

    # reachability over state_next assignments
    succ: dict[str, set[str]] = {s: set() for s in states}
    cur = None
    for ln in lines:
        w = re.match(r"^\s*when\s+(\w+)\s*=>", ln)
        if w:
            cur = w.group(1)
            continue
        for t in re.findall(r"state_next\s*<=\s*(\w+)", ln):
            if cur is not None and t != "state":
                succ.setdefault(cur, set()).add(t)
            elif t not in ("state",) and cur is None:
                pass
        if re.match(r"^\s*end\s+case\b", ln):
            cur = None
    reset = re.search(r"state\s*<=\s*(\w+)\s*;", body)
    start = reset.group(1) if reset else (states[0] if states else None)
    seen, todo = set(), deque([start] if start else [])
    while todo:
        s = todo.popleft()
        if s in seen:
            continue
        seen.add(s)
        todo.extend(succ.get(s, ()))
    problems += [f"state {s} unreachable" for s in states if s not in seen]
    problems += [f"transition to undeclared state {t}" for ts in succ.values() for t in ts if t not in states]
    return problems
