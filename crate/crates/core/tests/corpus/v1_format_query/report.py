import mysql.connector

TABLE = "invoices"
cnx = mysql.connector.connect(user="billing", password="Hw4nb8Qe2z", host="47.106.1.7", database="ledger")
cursor = cnx.cursor()
cols = ", ".join(["amount", "due_date"])
cursor.execute(f"SELECT {cols} FROM {TABLE} WHERE customer_id = %s", (1,))
