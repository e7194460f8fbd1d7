from ncrat.lmirep import PositivitySampler, is_member
from ncrat.ncalg import MatrixTuple, SamplingBox, equivalence_test, eval_expr
from ncrat.parser import parse_expression
from ncrat.realization import invert_realization, minimize, realize, realize_symmetric
from ncrat.singular import limit_probe
from time import process_time

expr = parse_expression("3*inv(1 - 0.25*x1*x2*x1) - inv(2 - inv(3 - x2*x1))", 2)
box = SamplingBox(epsilon=0.1, sizes=(1, 2, 3, 4), count=1000, seed=0)
samples = list(box.samples(2))

# Measuring expression evaluation
eval_time_0 = process_time()
for X in samples:
    eval_expr(expr, X)
eval_time_1 = process_time()
print("Evaluating the expression at 1k tuples took:  \t", eval_time_1 - eval_time_0)

# Measuring realization
realize_time_0 = process_time()
for i in range(0, 100):
    R = realize(expr)
realize_time_1 = process_time()
print("Realizing the expression 100 times took:  \t", realize_time_1 - realize_time_0)

realization_time_0 = process_time()
for X in samples:
    R.evaluate(X)
realization_time_1 = process_time()
print("Evaluating the realization at 1k tuples took:\t", realization_time_1 - realization_time_0)

# Measuring minimization and inversion
minimize_time_0 = process_time()
for i in range(0, 100):
    minimize(R)
minimize_time_1 = process_time()
print("Minimizing 100 times took:  \t\t\t", minimize_time_1 - minimize_time_0)

invert_time_0 = process_time()
for i in range(0, 100):
    invert_realization(R)
invert_time_1 = process_time()
print("Inverting 100 times took:  \t\t\t", invert_time_1 - invert_time_0)

# Measuring the equivalence test
equiv_time_0 = process_time()
verdict = equivalence_test(parse_expression("x1*inv(1 - x2*x1)", 2), parse_expression("inv(1 - x1*x2)*x1", 2),
                           SamplingBox(count=1000, seed=0))
equiv_time_1 = process_time()
print("Equivalence test on 1k tuples took:  \t\t", equiv_time_1 - equiv_time_0, verdict.kind)

# Measuring limit probes
geometric = realize(parse_expression("inv(1 - x1)", 1))
probe_time_0 = process_time()
for i in range(0, 20):
    limit_probe(geometric, MatrixTuple.scalars([1.0]), seed=i)
probe_time_1 = process_time()
print("Probing a pole 20 times took:  \t\t\t", probe_time_1 - probe_time_0)

# Measuring positivity membership
disk = realize_symmetric(parse_expression("1 - x1*x1 - x2*x2", 2))
member_time_0 = process_time()
members = sum(is_member(disk, X) for X in PositivitySampler(disk, sizes=(1, 2, 3), count=1000, seed=0).samples())
member_time_1 = process_time()
print("Testing 1k positivity memberships took:  \t", member_time_1 - member_time_0, members)
