"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES = []


def report(number, title, checks):
    ok = all(c.passed for c in checks)
    head = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title}"
    LINES.append(head)
    print(head)
    for c in checks:
        line = "      " + c.line()
        LINES.append(line)
        print(line)
    return ok
