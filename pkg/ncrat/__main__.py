from ncrat.cli import main

main()
